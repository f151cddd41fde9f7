#pragma once

// Run configuration and the end-to-end steps behind the command-line tool:
// model curves, synthetic exclusion experiments and constraint curves.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "casimir/corrections.hpp"
#include "casimir/hypforce.hpp"
#include "casimir/lifshitz.hpp"
#include "casimir/metrology.hpp"
#include "casimir/optics.hpp"

namespace casimir {

// Flat "key = value" text with [section] headers. Keys are addressed as
// "section.key". Unknown keys are rejected.
class ConfigDocument {
 public:
  static ConfigDocument parse(const std::string& text, const std::string& source = "<config>");
  static ConfigDocument load(const std::string& path);

  // Replaces section.key with the value of CASIMIR_<SECTION>_<KEY> when
  // that variable is set. `getenv` is injectable for tests.
  void apply_env(const std::function<const char*(const char*)>& getenv);

  void set(const std::string& key, const std::string& value);
  std::optional<std::string> get(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }
  const std::string& base_dir() const { return base_dir_; }

  // "section.key=value" lines in key order, without output.dir.
  std::string canonical() const;

 private:
  std::map<std::string, std::string> values_;
  std::string base_dir_;
};

const std::vector<std::string>& known_config_keys();

struct RunConfig {
  // physics
  double temperature = 300.0;
  std::vector<ReflectionKind> models = {ReflectionKind::Impedance};
  double z_min = 160e-9;
  double z_max = 750e-9;
  double z_step = 1e-9;
  double quad_tol = 1e-9;
  unsigned threads = 0;

  // optics
  std::string optical_table;  // empty: synthetic Drude table
  std::optional<FrequencyUnit> optical_unit;
  DrudeParameters drude;
  int kk_l_max = 0;  // 0: default_l_max at z_min

  // roughness
  std::string roughness_sphere;
  std::string roughness_plate;

  // geometry and theory budget
  SphereGeometry sphere;
  double dz = 0.6e-9;
  double optical_rel = 0.005;

  // experiment
  ReflectionKind generator = ReflectionKind::Impedance;
  std::vector<ReflectionKind> tested = {ReflectionKind::Impedance};
  std::string ensemble_file;  // empty: synthetic
  int n_sets = 15;
  int points_per_set = 290;
  double bin_width = 1.2e-9;
  std::vector<PlantedOffset> planted;
  double outlier_significance = 0.01;
  std::vector<std::pair<double, double>> noise_knots;  // (z m, per-point relative sigma)
  bool theory_draws = true;  // offset synthetic data by one draw of the theory budget
  ExclusionOptions exclusion;
  double confidence = 0.95;
  std::uint64_t seed = 1;

  // yukawa
  std::string stacks_file;  // empty: built-in stacks
  double lambda_min = 40e-9;
  double lambda_max = 370e-9;
  int lambda_count = 34;
  std::string band_file;
  std::string reference_curve;
  ConstraintOptions constraint;

  // output
  std::string out_dir = "out";

  std::string hash;  // FNV-1a of the canonical document and constants version, hex

  void validate() const;  // throws std::invalid_argument
};

RunConfig make_run_config(const ConfigDocument& doc);

std::uint64_t fnv1a(const std::string& text);

// Permittivity from the configured table, or from a synthetic Drude table.
PermittivityFn configured_permittivity(const RunConfig& cfg);
ReflectionModel configured_model(const RunConfig& cfg, ReflectionKind kind);
std::optional<RoughnessProfile> configured_roughness(const RunConfig& cfg);

// z grid [z_min, z_max] in steps of z_step, the last node at z_max.
std::vector<double> z_grid(double z_min, double z_max, double step);

// Pressure on the configured grid, roughness-averaged when profiles are
// configured, with rel_theory_error from the theory budget.
PressureCurve model_curve(const RunConfig& cfg, ReflectionKind kind, double confidence);

// Per-point noise plus the per-ensemble systematics used to synthesize data.
ErrorBudget synthetic_noise_budget(const RunConfig& cfg);
// Per-ensemble experimental components entering the band.
ErrorBudget experimental_systematics(const RunConfig& cfg);

struct ModelVerdict {
  ReflectionKind kind = ReflectionKind::Impedance;
  ConfidenceBand band;
  std::vector<Difference> differences;
  ExclusionVerdict verdict;
};

struct ExclusionRun {
  MeasurementEnsemble ensemble;        // as generated or loaded
  std::vector<std::size_t> outliers;   // dropped sets
  Curve experimental_error;            // absolute half-width, Pa
  std::vector<ModelVerdict> models;
};

// Curves are looked up by kind; missing kinds are computed.
ExclusionRun run_exclusion(const RunConfig& cfg, std::map<ReflectionKind, PressureCurve>& curves);

// Lambda grid, log-spaced between lambda_min and lambda_max.
std::vector<double> lambda_grid(const RunConfig& cfg);
StackPair configured_stacks(const RunConfig& cfg);

// "z_m,half_width_Pa" band file; '#' comment lines.
ConfidenceBand read_band_csv(const std::string& text, double confidence);
// "lambda_m,alpha" reference curve; '#' comment lines.
std::vector<std::pair<double, double>> read_reference_curve(const std::string& text);

// Linear interpolation of log alpha against log lambda; nullopt outside.
std::optional<double> interpolate_reference(const std::vector<std::pair<double, double>>& ref,
                                            double lambda);

}  // namespace casimir
