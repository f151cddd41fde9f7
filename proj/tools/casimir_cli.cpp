// casimir: dispersion transform, pressure sweeps, synthetic exclusion runs
// and Yukawa constraint curves, all written as CSV/JSON.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "casimir/constants.hpp"
#include "casimir/pipeline.hpp"

namespace fs = std::filesystem;
using namespace casimir;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> confidence;
  std::string out;
};

RunConfig load_config(const Options& o) {
  ConfigDocument doc = o.config.empty() ? ConfigDocument{} : ConfigDocument::load(o.config);
  doc.apply_env([](const char* name) { return std::getenv(name); });
  if (o.seed) doc.set("experiment.seed", std::to_string(*o.seed));
  if (o.confidence) {
    std::ostringstream s;
    s << *o.confidence;
    doc.set("experiment.confidence", s.str());
  }
  if (!o.out.empty()) doc.set("output.dir", fs::absolute(o.out).string());
  return make_run_config(doc);
}

// Single owner per file; the header records the config hash and constants.
class Artifact {
 public:
  Artifact(const RunConfig& cfg, const std::string& name, bool csv = true)
      : path_((fs::path(cfg.out_dir) / name).string()) {
    fs::create_directories(cfg.out_dir);
    out_.open(path_);
    if (!out_) throw std::runtime_error("cannot write '" + path_ + "'");
    out_.precision(10);
    if (csv) {
      out_ << "# config_hash=" << cfg.hash << '\n'
           << "# constants=" << constants::kConstantsVersion << '\n';
    }
  }
  std::ostream& out() { return out_; }
  void close() {
    out_.close();
    if (!out_) throw std::runtime_error("write failed for '" + path_ + "'");
    std::cout << "wrote " << path_ << '\n';
  }

 private:
  std::string path_;
  std::ofstream out_;
};

nlohmann::json stamp(const RunConfig& cfg) {
  return {{"config_hash", cfg.hash}, {"constants_version", constants::kConstantsVersion}};
}

void cmd_kk(const RunConfig& cfg) {
  if (cfg.kk_l_max < 0) throw std::invalid_argument("kk: l_max must be >= 1");
  const int l_max = cfg.kk_l_max > 0 ? cfg.kk_l_max : default_l_max(cfg.temperature, cfg.z_min);
  if (l_max < 1) throw std::invalid_argument("kk: empty Matsubara grid");
  const auto eps = configured_permittivity(cfg);
  Artifact a(cfg, "kk.csv");
  a.out() << "xi_rad_s,epsilon\n";
  for (int l = 1; l <= l_max; ++l) {
    const double xi = matsubara_frequency(cfg.temperature, l);
    a.out() << xi << ',' << eps(xi) << '\n';
  }
  a.close();
}

void write_curve(const RunConfig& cfg, const PressureCurve& c, ReflectionKind kind) {
  Artifact a(cfg, "pressure_" + std::string(to_string(kind)) + ".csv");
  a.out() << "z_m,pressure_Pa,rel_theory_error\n";
  for (const auto& e : c.entries) a.out() << e.z << ',' << e.pressure << ',' << e.rel_theory_error << '\n';
  a.close();
}

PressureCurve checked_curve(const RunConfig& cfg, ReflectionKind kind) {
  try {
    return model_curve(cfg, kind, cfg.confidence);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(to_string(kind)) + ": " + e.what());
  }
}

void cmd_pressure(const RunConfig& cfg) {
  for (auto kind : cfg.models) write_curve(cfg, checked_curve(cfg, kind), kind);
}

void cmd_exclusion(const RunConfig& cfg) {
  std::map<ReflectionKind, PressureCurve> curves;
  for (auto kind : cfg.tested) curves.emplace(kind, checked_curve(cfg, kind));
  const auto run = run_exclusion(cfg, curves);

  {
    Artifact a(cfg, "ensemble.csv");
    write_ensemble_csv(a.out(), run.ensemble);
    a.close();
  }
  if (!run.outliers.empty()) {
    std::cout << "outlying sets dropped:";
    for (auto s : run.outliers) std::cout << ' ' << s;
    std::cout << '\n';
  }
  for (const auto& m : run.models) {
    const std::string name(to_string(m.kind));
    {
      Artifact a(cfg, "band_" + name + ".csv");
      a.out() << "z_m,half_width_Pa\n";
      for (const auto& e : m.band.entries) a.out() << e.z << ',' << e.half_width << '\n';
      a.close();
    }
    {
      Artifact a(cfg, "differences_" + name + ".csv");
      a.out() << "z_m,difference_Pa,half_width_Pa\n";
      for (const auto& d : m.differences) {
        a.out() << d.z << ',' << d.value << ',' << m.band.half_width_at(d.z) << '\n';
      }
      a.close();
    }
    const auto& v = m.verdict;
    nlohmann::json j = stamp(cfg);
    j["model"] = v.model;
    j["confidence"] = v.confidence;
    j["points"] = v.points;
    j["outside"] = v.outside;
    j["fraction_outside"] = v.fraction_outside;
    j["positive_fraction"] = v.positive_fraction;
    j["accepted"] = v.accepted;
    j["outlying_sets"] = run.outliers;
    j["excluded_windows"] = nlohmann::json::array();
    for (const auto& w : v.excluded_windows) {
      j["excluded_windows"].push_back({{"z_min", w.z_min}, {"z_max", w.z_max}});
    }
    Artifact a(cfg, "verdict_" + name + ".json", false);
    a.out() << j.dump(2) << '\n';
    a.close();

    std::cout << name << ": " << (v.accepted ? "accepted" : "excluded") << ", "
              << v.outside << '/' << v.points << " outside";
    for (const auto& w : v.excluded_windows) {
      std::cout << " [" << w.z_min * 1e9 << ", " << w.z_max * 1e9 << "] nm";
    }
    std::cout << '\n';
  }
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void cmd_constraints(const RunConfig& cfg) {
  std::string band_path = cfg.band_file;
  if (band_path.empty()) {
    band_path = (fs::path(cfg.out_dir) / ("band_" + std::string(to_string(cfg.generator)) + ".csv")).string();
    if (!fs::exists(band_path)) {
      throw std::runtime_error("band missing: set yukawa.band or run 'exclusion' first (looked for '" +
                               band_path + "')");
    }
  }
  const auto band = read_band_csv(slurp(band_path), cfg.confidence);
  const auto stacks = configured_stacks(cfg);
  const auto curve = constraint_curve(band, stacks.sphere, stacks.plate, lambda_grid(cfg), cfg.constraint);
  for (const auto& w : curve.warnings) std::cerr << "warning: " << w << '\n';

  Artifact a(cfg, "constraints.csv");
  a.out() << "lambda_m,alpha_max,z_best_m\n";
  for (const auto& e : curve.entries) a.out() << e.lambda << ',' << e.alpha_max << ',' << e.z_best << '\n';
  a.close();

  if (cfg.reference_curve.empty()) return;
  const auto ref = read_reference_curve(slurp(cfg.reference_curve));
  Artifact o(cfg, "constraints_overlay.csv");
  o.out() << "lambda_m,alpha_max,alpha_reference,reference_over_alpha_max\n";
  for (const auto& e : curve.entries) {
    if (auto r = interpolate_reference(ref, e.lambda)) {
      o.out() << e.lambda << ',' << e.alpha_max << ',' << *r << ',' << *r / e.alpha_max << '\n';
    }
  }
  o.close();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermal Casimir pressure, exclusion tests and Yukawa constraints"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "Config file ([section] key = value)")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Seed for synthetic data");
  app.add_option("--confidence", o.confidence, "Confidence level")->check(CLI::IsMember({0.95, 0.99}));
  app.add_option("--out", o.out, "Output directory");

  auto* kk = app.add_subcommand("kk", "epsilon(i xi) on the Matsubara grid");
  auto* pressure = app.add_subcommand("pressure", "Pressure curve per configured model");
  auto* exclusion = app.add_subcommand("exclusion", "Synthetic ensemble, bands and verdicts");
  auto* constraints = app.add_subcommand("constraints", "Yukawa constraint curve from a band");

  CLI11_PARSE(app, argc, argv);
  try {
    const auto cfg = load_config(o);
    if (kk->parsed()) cmd_kk(cfg);
    if (pressure->parsed()) cmd_pressure(cfg);
    if (exclusion->parsed()) cmd_exclusion(cfg);
    if (constraints->parsed()) cmd_constraints(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
