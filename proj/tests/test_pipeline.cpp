#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "casimir/pipeline.hpp"
#include "oracles.hpp"

using namespace casimir;
namespace fs = std::filesystem;

namespace {

const std::string kData = CASIMIR_DATA_DIR;

ConfigDocument doc_from(const std::string& text) {
  return ConfigDocument::parse(text);
}

}  // namespace

TEST_CASE("config documents") {
  auto d = doc_from("# c\n[physics]\ntemperature_K = 10  # cold\nmodels = Impedance, IdealMetal\n");
  CHECK(*d.get("physics.temperature_K") == "10");
  auto cfg = make_run_config(d);
  CHECK(cfg.temperature == 10.0);
  REQUIRE(cfg.models.size() == 2);
  CHECK(cfg.models[1] == ReflectionKind::IdealMetal);

  CHECK_THROWS_WITH(doc_from("[physics]\ntemprature_K = 3\n"),
                    doctest::Contains("<config>:2: unknown key 'physics.temprature_K'"));
  CHECK_THROWS(doc_from("temperature_K = 3\n"));
  CHECK_THROWS(doc_from("[physics\n"));
  CHECK_THROWS(make_run_config(doc_from("[physics]\ntemperature_K = -1\n")));
  CHECK_THROWS(make_run_config(doc_from("[physics]\ntemperature_K = 3K\n")));
  CHECK_THROWS(make_run_config(doc_from("[experiment]\nconfidence = 0.9\n")));
  CHECK_THROWS(make_run_config(doc_from("[physics]\nmodels = Drude\n")));
  CHECK_THROWS(make_run_config(doc_from("[optics]\ntable = /no/such/file.txt\n")));
  CHECK_THROWS(make_run_config(doc_from("[roughness]\nsphere = " + kData + "/roughness_sphere.txt\n")));
}

TEST_CASE("environment overrides and the config hash") {
  auto d = doc_from("[experiment]\nseed = 4\n");
  const auto base = make_run_config(d).hash;
  CHECK(base == make_run_config(doc_from("[experiment]\nseed = 4\n")).hash);
  d.apply_env([](const char* name) -> const char* {
    return std::string(name) == "CASIMIR_EXPERIMENT_SEED" ? "9" : nullptr;
  });
  const auto cfg = make_run_config(d);
  CHECK(cfg.seed == 9);
  CHECK(cfg.hash != base);
  CHECK(cfg.hash.size() == 16);
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("relative paths resolve against the config file") {
  const auto cfg = make_run_config(ConfigDocument::load(kData + "/gold_300K.ini"));
  CHECK(fs::path(cfg.roughness_sphere).filename() == "roughness_sphere.txt");
  CHECK(fs::exists(cfg.roughness_sphere));
  CHECK(fs::exists(cfg.stacks_file));
  CHECK(cfg.tested.size() == 3);
  CHECK(cfg.planted.size() == 1);
}

TEST_CASE("ideal metal sweep near zero temperature") {
  auto cfg = make_run_config(doc_from(
      "[physics]\ntemperature_K = 1\nmodels = IdealMetal\nz_min_m = 1e-6\nz_max_m = 1e-6\n"));
  const auto c = model_curve(cfg, ReflectionKind::IdealMetal, 0.95);
  REQUIRE(c.entries.size() == 1);
  CHECK(c.entries[0].pressure == doctest::Approx(-1.300e-3).epsilon(5e-4));
  CHECK(c.entries[0].pressure == doctest::Approx(oracle::ideal_pressure_t0(1e-6)).epsilon(1e-4));
}

TEST_CASE("two models share a grid; roughness shifts pressure only") {
  auto d = doc_from(
      "[physics]\nmodels = Impedance, LifshitzDrude\nz_min_m = 200e-9\nz_max_m = 260e-9\nz_step_m = 20e-9\n");
  const auto cfg = make_run_config(d);
  const auto a = model_curve(cfg, ReflectionKind::Impedance, 0.95);
  const auto b = model_curve(cfg, ReflectionKind::LifshitzDrude, 0.95);
  REQUIRE(a.entries.size() == 4);
  REQUIRE(b.entries.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a.entries[i].z == b.entries[i].z);

  d.set("roughness.sphere", kData + "/roughness_sphere.txt");
  d.set("roughness.plate", kData + "/roughness_plate.txt");
  const auto r = model_curve(make_run_config(d), ReflectionKind::Impedance, 0.95);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(r.entries[i].z == a.entries[i].z);
    CHECK(r.entries[i].rel_theory_error == a.entries[i].rel_theory_error);
    // Averaging a convex pressure over heights makes it stronger.
    CHECK(r.entries[i].pressure < a.entries[i].pressure);
    CHECK(r.entries[i].pressure / a.entries[i].pressure < 1.03);
  }
}

TEST_CASE("z grids") {
  CHECK(z_grid(1e-7, 1e-7, 1e-9).size() == 1);
  const auto g = z_grid(160e-9, 750e-9, 1e-9);
  CHECK(g.size() == 591);
  CHECK(g.back() == doctest::Approx(750e-9).epsilon(1e-12));
  CHECK(z_grid(1e-7, 1.05e-7, 2e-9).back() == 1.05e-7);
  CHECK_THROWS(z_grid(0.0, 1e-7, 1e-9));
}

TEST_CASE("zero-noise exclusion run") {
  auto d = doc_from(
      "[physics]\nz_min_m = 200e-9\nz_max_m = 300e-9\nz_step_m = 2e-9\n"
      "[geometry]\nradius_error_m = 0\n"
      "[experiment]\nnoise_knots = 200e-9:0\ntheory_draws = false\nn_sets = 4\npoints_per_set = 60\n"
      "outlier_set = none\n");
  const auto cfg = make_run_config(d);
  std::map<ReflectionKind, PressureCurve> curves;
  const auto run = run_exclusion(cfg, curves);
  REQUIRE(run.models.size() == 1);
  CHECK(run.outliers.empty());
  CHECK(run.models[0].verdict.fraction_outside == 0.0);
  CHECK(run.models[0].verdict.accepted);
}

TEST_CASE("full-scale exclusion run") {
  auto cfg = make_run_config(ConfigDocument::load(kData + "/gold_300K.ini"));
  std::map<ReflectionKind, PressureCurve> curves;
  const auto run = run_exclusion(cfg, curves);
  REQUIRE(run.outliers.size() >= 1);
  CHECK(run.outliers.front() == 7);

  const auto& imp = run.models[0];
  CHECK(imp.kind == ReflectionKind::Impedance);
  CHECK(imp.verdict.accepted);
  const auto& p = curves.at(ReflectionKind::Impedance);
  auto rel = [&](double z) { return imp.band.half_width_at(z) / std::abs(p.pressure_at(z)); };
  CHECK(rel(170e-9) == doctest::Approx(0.019).epsilon(0.3 / 1.9));
  for (double z : {270e-9, 300e-9, 370e-9}) CHECK(rel(z) == doctest::Approx(0.014).epsilon(0.3 / 1.4));
  CHECK(rel(749e-9) == doctest::Approx(0.13).epsilon(0.15));

  // Drude predicts a weaker attraction, so theory minus experiment is positive.
  const auto& drude = run.models[1];
  CHECK(!drude.verdict.accepted);
  CHECK(drude.verdict.positive_fraction > 0.9);
  CHECK(!run.models[2].verdict.accepted);

  std::map<ReflectionKind, PressureCurve> again = curves;
  const auto run2 = run_exclusion(cfg, again);
  CHECK(run2.ensemble.sets == run.ensemble.sets);
  CHECK(run2.models[1].verdict.fraction_outside == drude.verdict.fraction_outside);
}

TEST_CASE("constraint inputs") {
  auto d = doc_from("[yukawa]\nlambda_min_m = 1e-7\nlambda_max_m = 1e-7\nlambda_count = 1\n");
  CHECK(lambda_grid(make_run_config(d)).size() == 1);
  const auto g = lambda_grid(RunConfig{});
  CHECK(g.size() == 34);
  CHECK(g.front() == 40e-9);
  CHECK(g.back() == 370e-9);

  const auto band = read_band_csv("# c\nz_m,half_width_Pa\n1.6e-7,0.02\n7.5e-7,0.02\n", 0.95);
  CHECK(band.half_width_at(3e-7) == doctest::Approx(0.02));
  CHECK_THROWS(read_band_csv("z,hw\n1,2\n", 0.95));
  CHECK_THROWS(read_band_csv("z_m,half_width_Pa\n1.6e-7\n", 0.95));

  const auto stacks = configured_stacks(RunConfig{});
  const std::vector<double> lambdas = {5e-8, 1e-7, 2e-7};
  const auto c = constraint_curve(band, stacks.sphere, stacks.plate, lambdas);
  const auto l = legacy_rms_constraint(0.02, stacks.sphere, stacks.plate, {1.6e-7, 7.5e-7}, lambdas);
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    CHECK(c.entries[i].alpha_max == doctest::Approx(l.entries[i].alpha_max).epsilon(1e-12));
  }

  const auto ref = read_reference_curve("lambda_m,alpha\n2e-7,1e12\n1e-7,1e14\n");
  CHECK(ref.front().first == 1e-7);
  CHECK(*interpolate_reference(ref, 1e-7) == 1e14);
  CHECK(*interpolate_reference(ref, std::sqrt(2.0) * 1e-7) == doctest::Approx(1e13));
  CHECK(!interpolate_reference(ref, 3e-7));
  CHECK_THROWS(read_reference_curve("lambda_m,alpha\n1e-7,-1\n"));
}
