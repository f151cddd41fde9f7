#include "casimir/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include "casimir/constants.hpp"

namespace casimir {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(std::string("cannot open ") + what + " '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Per-point noise of the full-scale run, relative sigma against z.
const std::vector<std::pair<double, double>> kDefaultNoiseKnots = {
    {160e-9, 0.00578}, {170e-9, 0.00578}, {270e-9, 0.00634}, {300e-9, 0.00634},
    {370e-9, 0.00941}, {420e-9, 0.0150},  {500e-9, 0.0287},  {600e-9, 0.0562},
    {680e-9, 0.0950},  {750e-9, 0.1520}};

}  // namespace

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "physics.temperature_K",      "physics.models",
      "physics.z_min_m",            "physics.z_max_m",
      "physics.z_step_m",           "physics.quad_tol",
      "physics.threads",            "optics.table",
      "optics.unit",                "optics.omega_p_rad_s",
      "optics.gamma_rad_s",         "optics.kk_l_max",
      "roughness.sphere",           "roughness.plate",
      "geometry.radius_m",          "geometry.radius_error_m",
      "geometry.dz_m",              "geometry.optical_rel",
      "experiment.generator",       "experiment.tested",
      "experiment.ensemble",        "experiment.n_sets",
      "experiment.points_per_set",  "experiment.bin_width_m",
      "experiment.outlier_set",     "experiment.outlier_sigmas",
      "experiment.outlier_significance", "experiment.noise_knots",
      "experiment.theory_draws",
      "experiment.window_m",        "experiment.window_threshold",
      "experiment.confidence",      "experiment.seed",
      "yukawa.stacks",              "yukawa.lambda_min_m",
      "yukawa.lambda_max_m",        "yukawa.lambda_count",
      "yukawa.band",                "yukawa.reference",
      "yukawa.coarse_points",       "yukawa.plate_size_m",
      "output.dir"};
  return keys;
}

ConfigDocument ConfigDocument::parse(const std::string& text, const std::string& source) {
  ConfigDocument doc;
  const std::set<std::string> known(known_config_keys().begin(), known_config_keys().end());
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fail = [&](const std::string& why) {
      return std::invalid_argument(source + ":" + std::to_string(line_no) + ": " + why);
    };
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw fail("expected 'key = value'");
    if (section.empty()) throw fail("key outside a section");
    const std::string key = section + "." + trim(line.substr(0, eq));
    if (!known.count(key)) throw fail("unknown key '" + key + "'");
    doc.values_[key] = trim(line.substr(eq + 1));
  }
  return doc;
}

ConfigDocument ConfigDocument::load(const std::string& path) {
  auto doc = parse(read_file(path, "config file"), path);
  doc.base_dir_ = fs::absolute(fs::path(path)).parent_path().string();
  return doc;
}

void ConfigDocument::apply_env(const std::function<const char*(const char*)>& getenv) {
  for (const auto& key : known_config_keys()) {
    std::string var = "CASIMIR_" + upper(key);
    std::replace(var.begin(), var.end(), '.', '_');
    if (const char* v = getenv(var.c_str())) values_[key] = trim(v);
  }
}

void ConfigDocument::set(const std::string& key, const std::string& value) {
  const auto& k = known_config_keys();
  if (std::find(k.begin(), k.end(), key) == k.end()) {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
  values_[key] = value;
}

std::optional<std::string> ConfigDocument::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string ConfigDocument::canonical() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) {
    if (k != "output.dir") out << k << '=' << v << '\n';
  }
  return out.str();
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RunConfig make_run_config(const ConfigDocument& doc) {
  RunConfig c;
  c.noise_knots = kDefaultNoiseKnots;
  c.planted = {{7, 5.0}};
  auto num = [&](const std::string& key, double& out) {
    if (auto v = doc.get(key)) {
      try {
        std::size_t used = 0;
        out = std::stod(*v, &used);
        if (used != v->size()) throw std::invalid_argument(*v);
      } catch (const std::exception&) {
        throw std::invalid_argument("config " + key + ": not a number: '" + *v + "'");
      }
    }
  };
  auto integer = [&](const std::string& key, auto& out) {
    if (auto v = doc.get(key)) {
      try {
        std::size_t used = 0;
        const long long x = std::stoll(*v, &used);
        if (used != v->size()) throw std::invalid_argument(*v);
        out = static_cast<std::remove_reference_t<decltype(out)>>(x);
      } catch (const std::exception&) {
        throw std::invalid_argument("config " + key + ": not an integer: '" + *v + "'");
      }
    }
  };
  auto kind = [&](const std::string& key, const std::string& v) {
    auto k = parse_reflection_kind(v);
    if (!k) throw std::invalid_argument("config " + key + ": unknown model '" + v + "'");
    return *k;
  };
  auto kinds = [&](const std::string& key, std::vector<ReflectionKind>& out) {
    if (auto v = doc.get(key)) {
      out.clear();
      for (const auto& item : split_list(*v)) out.push_back(kind(key, item));
    }
  };
  auto path = [&](const std::string& key, std::string& out) {
    if (auto v = doc.get(key); v && !v->empty()) {
      fs::path p(*v);
      if (p.is_relative() && !doc.base_dir().empty()) p = fs::path(doc.base_dir()) / p;
      out = p.lexically_normal().string();
    }
  };

  num("physics.temperature_K", c.temperature);
  kinds("physics.models", c.models);
  num("physics.z_min_m", c.z_min);
  num("physics.z_max_m", c.z_max);
  num("physics.z_step_m", c.z_step);
  num("physics.quad_tol", c.quad_tol);
  integer("physics.threads", c.threads);

  path("optics.table", c.optical_table);
  if (auto v = doc.get("optics.unit")) {
    c.optical_unit = parse_frequency_unit(*v);
    if (!c.optical_unit) throw std::invalid_argument("config optics.unit: unknown unit '" + *v + "'");
  }
  num("optics.omega_p_rad_s", c.drude.omega_p);
  num("optics.gamma_rad_s", c.drude.gamma);
  integer("optics.kk_l_max", c.kk_l_max);

  path("roughness.sphere", c.roughness_sphere);
  path("roughness.plate", c.roughness_plate);

  num("geometry.radius_m", c.sphere.radius);
  num("geometry.radius_error_m", c.sphere.radius_error);
  num("geometry.dz_m", c.dz);
  num("geometry.optical_rel", c.optical_rel);

  if (auto v = doc.get("experiment.generator")) c.generator = kind("experiment.generator", *v);
  kinds("experiment.tested", c.tested);
  path("experiment.ensemble", c.ensemble_file);
  integer("experiment.n_sets", c.n_sets);
  integer("experiment.points_per_set", c.points_per_set);
  num("experiment.bin_width_m", c.bin_width);
  if (auto v = doc.get("experiment.outlier_set")) {
    if (trim(*v) == "none") {
      c.planted.clear();
    } else {
      long long s = 0;
      integer("experiment.outlier_set", s);
      if (s < 0) throw std::invalid_argument("config experiment.outlier_set must be >= 0");
      c.planted = {{static_cast<std::size_t>(s), 5.0}};
    }
  }
  if (!c.planted.empty()) num("experiment.outlier_sigmas", c.planted.front().sigmas);
  num("experiment.outlier_significance", c.outlier_significance);
  if (auto v = doc.get("experiment.noise_knots")) {
    c.noise_knots.clear();
    for (const auto& item : split_list(*v)) {
      const auto colon = item.find(':');
      try {
        if (colon == std::string::npos) throw std::invalid_argument(item);
        c.noise_knots.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
      } catch (const std::exception&) {
        throw std::invalid_argument("config experiment.noise_knots: expected 'z_m:sigma' pairs, got '" +
                                    item + "'");
      }
    }
  }
  if (auto v = doc.get("experiment.theory_draws")) {
    if (*v == "true") c.theory_draws = true;
    else if (*v == "false") c.theory_draws = false;
    else throw std::invalid_argument("config experiment.theory_draws: expected true or false");
  }
  num("experiment.window_m", c.exclusion.window_width);
  num("experiment.window_threshold", c.exclusion.threshold);
  num("experiment.confidence", c.confidence);
  integer("experiment.seed", c.seed);

  path("yukawa.stacks", c.stacks_file);
  num("yukawa.lambda_min_m", c.lambda_min);
  num("yukawa.lambda_max_m", c.lambda_max);
  integer("yukawa.lambda_count", c.lambda_count);
  path("yukawa.band", c.band_file);
  path("yukawa.reference", c.reference_curve);
  integer("yukawa.coarse_points", c.constraint.coarse_points);
  num("yukawa.plate_size_m", c.constraint.plate_size);

  path("output.dir", c.out_dir);

  std::ostringstream h;
  h << std::hex << std::setw(16) << std::setfill('0')
    << fnv1a(doc.canonical() + "constants=" + std::string(constants::kConstantsVersion));
  c.hash = h.str();
  c.validate();
  return c;
}

void RunConfig::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string("config: ") + what + " must be positive");
    }
  };
  positive(temperature, "temperature");
  positive(z_min, "z_min");
  positive(z_step, "z_step");
  positive(quad_tol, "quad_tol");
  if (!(z_max >= z_min)) throw std::invalid_argument("config: z_max must be >= z_min");
  if (models.empty()) throw std::invalid_argument("config: no models requested");
  drude.validate();
  sphere.validate();
  if (!(dz >= 0.0)) throw std::invalid_argument("config: dz must be >= 0");
  if (!(optical_rel >= 0.0)) throw std::invalid_argument("config: optical_rel must be >= 0");
  if (tested.empty()) throw std::invalid_argument("config: no tested models");
  if (n_sets < 1 || points_per_set < 1) {
    throw std::invalid_argument("config: n_sets and points_per_set must be >= 1");
  }
  positive(bin_width, "bin_width");
  for (const auto& p : planted) {
    if (p.set >= static_cast<std::size_t>(n_sets)) {
      throw std::invalid_argument("config: outlier_set is not a valid set index");
    }
  }
  if (!(outlier_significance > 0.0 && outlier_significance < 1.0)) {
    throw std::invalid_argument("config: outlier_significance must be in (0, 1)");
  }
  for (std::size_t i = 0; i < noise_knots.size(); ++i) {
    positive(noise_knots[i].first, "noise knot z");
    if (!(noise_knots[i].second >= 0.0)) throw std::invalid_argument("config: noise sigma < 0");
    if (i > 0 && !(noise_knots[i].first > noise_knots[i - 1].first)) {
      throw std::invalid_argument("config: noise knots must increase in z");
    }
  }
  positive(exclusion.window_width, "window");
  if (!(exclusion.threshold >= 0.0 && exclusion.threshold < 1.0)) {
    throw std::invalid_argument("config: window_threshold must be in [0, 1)");
  }
  if (confidence != 0.95 && confidence != 0.99) {
    throw std::invalid_argument("config: confidence must be 0.95 or 0.99");
  }
  positive(lambda_min, "lambda_min");
  if (!(lambda_max >= lambda_min)) throw std::invalid_argument("config: lambda_max < lambda_min");
  if (lambda_count < 1) throw std::invalid_argument("config: lambda_count must be >= 1");
  positive(constraint.plate_size, "plate_size");
  for (const auto* f : {&optical_table, &roughness_sphere, &roughness_plate, &ensemble_file,
                        &stacks_file, &band_file, &reference_curve}) {
    if (!f->empty() && !fs::exists(*f)) {
      throw std::invalid_argument("config: referenced file does not exist: '" + *f + "'");
    }
  }
  if (roughness_sphere.empty() != roughness_plate.empty()) {
    throw std::invalid_argument("config: give both roughness.sphere and roughness.plate, or neither");
  }
}

PermittivityFn configured_permittivity(const RunConfig& cfg) {
  if (cfg.optical_table.empty()) {
    return make_tabulated_permittivity(
        synthesize_drude_dataset(cfg.drude, 1e11, 1e19, 40, "Drude (synthetic)"), cfg.drude);
  }
  return make_tabulated_permittivity(load_optical_table_file(cfg.optical_table, cfg.optical_unit),
                                     cfg.drude);
}

ReflectionModel configured_model(const RunConfig& cfg, ReflectionKind kind) {
  if (kind == ReflectionKind::IdealMetal) return ReflectionModel::ideal_metal();
  return ReflectionModel::make(kind, configured_permittivity(cfg), cfg.drude.omega_p);
}

std::optional<RoughnessProfile> configured_roughness(const RunConfig& cfg) {
  if (cfg.roughness_sphere.empty()) return std::nullopt;
  return RoughnessProfile{load_height_histogram(cfg.roughness_sphere),
                          load_height_histogram(cfg.roughness_plate)};
}

std::vector<double> z_grid(double z_min, double z_max, double step) {
  if (!(z_min > 0.0 && z_max >= z_min && step > 0.0)) {
    throw std::invalid_argument("z grid: need 0 < z_min <= z_max and step > 0");
  }
  std::vector<double> zs;
  const auto n = static_cast<long long>(std::floor((z_max - z_min) / step + 1e-9));
  for (long long i = 0; i <= n; ++i) zs.push_back(z_min + static_cast<double>(i) * step);
  if (z_max - zs.back() > 1e-6 * step) zs.push_back(z_max);
  return zs;
}

PressureCurve model_curve(const RunConfig& cfg, ReflectionKind kind, double confidence) {
  const auto model = configured_model(cfg, kind);
  const auto rough = configured_roughness(cfg);
  const auto zs = z_grid(cfg.z_min, cfg.z_max, cfg.z_step);
  PressureCurve out;
  if (!rough) {
    out = compute_pressure_curve(model, zs, cfg.temperature, cfg.quad_tol, cfg.threads);
  } else {
    const double reach = rough->sphere.max_abs_height() + rough->plate.max_abs_height();
    const double lo = cfg.z_min - reach - cfg.z_step;
    if (!(lo > 0.0)) {
      throw ContactError("roughness: profiles reach below z=0 at z_min", 0, 0);
    }
    const auto smooth = compute_pressure_curve(
        model, z_grid(lo, cfg.z_max + reach + cfg.z_step, cfg.z_step), cfg.temperature,
        cfg.quad_tol, cfg.threads);
    auto p = [&smooth](double z) { return smooth.pressure_at(z); };
    out.model_tag = smooth.model_tag;
    for (double z : zs) out.entries.push_back({z, roughness_corrected_pressure(p, *rough, z), 0.0});
  }
  for (auto& e : out.entries) {
    e.rel_theory_error = theory_error_curve(e.z, cfg.sphere, cfg.dz, cfg.optical_rel, confidence);
  }
  return out;
}

ErrorBudget synthetic_noise_budget(const RunConfig& cfg) {
  ErrorBudget b;
  if (!cfg.noise_knots.empty()) {
    b.components.push_back({"random", Distribution::Normal, 1.0, true, 0, Scope::PerPoint,
                            ZProfile::knots(cfg.noise_knots)});
  }
  for (const auto& c : experimental_systematics(cfg).components) b.components.push_back(c);
  if (cfg.theory_draws) {
    for (const auto& c : theory_budget(cfg.sphere, cfg.dz, cfg.optical_rel).components) {
      b.components.push_back(c);
    }
  }
  return b;
}

ErrorBudget experimental_systematics(const RunConfig& cfg) {
  ErrorBudget b;
  b.components.push_back({"sphere radius", Distribution::Uniform,
                          cfg.sphere.radius_error / cfg.sphere.radius, true, 0, Scope::PerEnsemble,
                          {}});
  return b;
}

ExclusionRun run_exclusion(const RunConfig& cfg, std::map<ReflectionKind, PressureCurve>& curves) {
  cfg.validate();
  auto curve_for = [&](ReflectionKind k) -> const PressureCurve& {
    auto it = curves.find(k);
    if (it == curves.end()) it = curves.emplace(k, model_curve(cfg, k, cfg.confidence)).first;
    return it->second;
  };
  ExclusionRun run;
  if (!cfg.ensemble_file.empty()) {
    run.ensemble = read_ensemble_csv(read_file(cfg.ensemble_file, "ensemble file"), cfg.bin_width);
  } else {
    SyntheticOptions o;
    o.n_sets = cfg.n_sets;
    o.points_per_set = cfg.points_per_set;
    o.z_min = cfg.z_min;
    o.z_max = cfg.z_max;
    o.bin_width = cfg.bin_width;
    o.seed = cfg.seed;
    o.planted = cfg.planted;
    run.ensemble = generate_synthetic_ensemble(curve_for(cfg.generator), synthetic_noise_budget(cfg), o);
  }
  MeasurementEnsemble kept = run.ensemble;
  if (run.ensemble.sets.size() >= 3) {
    run.outliers = detect_outlying_set(run.ensemble, cfg.outlier_significance);
    kept = run.ensemble.without_sets(run.outliers);
  }
  const auto binned = bin_ensemble(kept);
  run.experimental_error = experimental_error_curve(binned, experimental_systematics(cfg), cfg.confidence);
  auto theory = [&cfg](double z) {
    return theory_error_curve(z, cfg.sphere, cfg.dz, cfg.optical_rel, cfg.confidence);
  };
  for (auto kind : cfg.tested) {
    const auto& curve = curve_for(kind);
    ModelVerdict mv;
    mv.kind = kind;
    mv.band = confidence_band(theory, run.experimental_error, curve, cfg.confidence);
    for (const auto& d : binned_differences(kept, curve)) {
      if (d.z >= mv.band.z_min() && d.z <= mv.band.z_max()) mv.differences.push_back(d);
    }
    mv.verdict = exclusion_test(mv.differences, mv.band, cfg.exclusion);
    mv.verdict.model = std::string(to_string(kind));
    run.models.push_back(std::move(mv));
  }
  return run;
}

std::vector<double> lambda_grid(const RunConfig& cfg) {
  std::vector<double> out;
  if (cfg.lambda_count == 1) return {cfg.lambda_min};
  for (int i = 0; i < cfg.lambda_count; ++i) {
    out.push_back(cfg.lambda_min *
                  std::pow(cfg.lambda_max / cfg.lambda_min, static_cast<double>(i) / (cfg.lambda_count - 1)));
  }
  out.back() = cfg.lambda_max;
  return out;
}

StackPair configured_stacks(const RunConfig& cfg) {
  if (cfg.stacks_file.empty()) return {sphere_stack_default(), plate_stack_default()};
  return load_stacks(cfg.stacks_file);
}

namespace {

std::vector<std::pair<double, double>> read_two_columns(const std::string& text,
                                                        const std::string& header,
                                                        const char* what) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool seen_header = false;
  std::vector<std::pair<double, double>> out;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (!seen_header) {
      if (line != header) {
        throw std::invalid_argument(std::string(what) + ": expected header '" + header + "' at line " +
                                    std::to_string(line_no));
      }
      seen_header = true;
      continue;
    }
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument(line);
      std::size_t ua = 0, ub = 0;
      const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
      const double x = std::stod(a, &ua), y = std::stod(b, &ub);
      if (ua != a.size() || ub != b.size()) throw std::invalid_argument(line);
      out.emplace_back(x, y);
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string(what) + ": malformed line " + std::to_string(line_no));
    }
  }
  if (out.empty()) throw std::invalid_argument(std::string(what) + ": no rows");
  return out;
}

}  // namespace

ConfidenceBand read_band_csv(const std::string& text, double confidence) {
  ConfidenceBand b;
  b.confidence = confidence;
  for (const auto& [z, h] : read_two_columns(text, "z_m,half_width_Pa", "band file")) {
    b.entries.push_back({z, h});
  }
  b.validate();
  return b;
}

std::vector<std::pair<double, double>> read_reference_curve(const std::string& text) {
  auto rows = read_two_columns(text, "lambda_m,alpha", "reference curve");
  std::sort(rows.begin(), rows.end());
  for (const auto& [l, a] : rows) {
    if (!(l > 0.0 && a > 0.0)) throw std::invalid_argument("reference curve: values must be > 0");
  }
  return rows;
}

std::optional<double> interpolate_reference(const std::vector<std::pair<double, double>>& ref,
                                            double lambda) {
  if (ref.empty() || lambda < ref.front().first || lambda > ref.back().first) return std::nullopt;
  auto it = std::lower_bound(ref.begin(), ref.end(), std::make_pair(lambda, 0.0));
  if (it->first == lambda || it == ref.begin()) return it->second;
  const auto& lo = *(it - 1);
  const double t = std::log(lambda / lo.first) / std::log(it->first / lo.first);
  return std::exp(std::log(lo.second) + t * (std::log(it->second) - std::log(lo.second)));
}

}  // namespace casimir
