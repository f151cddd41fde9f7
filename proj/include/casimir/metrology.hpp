#pragma once

// Binning of repeated measurements, error budgets and their combination,
// confidence bands for theory minus experiment, exclusion verdicts and a
// seeded synthetic-measurement generator.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "casimir/corrections.hpp"
#include "casimir/lifshitz.hpp"

namespace casimir {

enum class Provenance { Synthetic, External };

struct MeasurementPoint {
  double z = 0.0;         // m
  double pressure = 0.0;  // Pa

  bool operator==(const MeasurementPoint&) const = default;
};

using MeasurementSet = std::vector<MeasurementPoint>;

struct MeasurementEnsemble {
  std::vector<MeasurementSet> sets;
  double bin_width = 1.2e-9;  // m
  Provenance provenance = Provenance::External;
  double z_min = 0.0;  // declared range, m
  double z_max = std::numeric_limits<double>::infinity();

  void validate() const;
  std::size_t point_count() const;
  // Copy without the listed sets.
  MeasurementEnsemble without_sets(const std::vector<std::size_t>& drop) const;
};

// One subinterval [index*w, (index+1)*w). When the points in a bin span a
// range of z and there are at least three of them, a straight line in z is
// removed before the variance is taken (dof = count - 2); otherwise dof =
// count - 1. Bins with a single point have no variance (dof = 0, NaN).
struct BinStats {
  long long index = 0;
  double z_mean = 0.0;
  double value_mean = 0.0;
  double variance = 0.0;
  int count = 0;
  int dof = 0;

  bool degenerate() const { return dof < 1; }
};

struct BinnedStats {
  double bin_width = 0.0;
  std::vector<BinStats> bins;  // increasing index, empty bins omitted
  std::size_t point_count = 0;
};

BinnedStats bin_points(std::vector<MeasurementPoint> points, double bin_width);
BinnedStats bin_ensemble(const MeasurementEnsemble& ensemble);

// Sets whose mean standardized residual against the other sets is an
// outlier by an iterated two-sided Grubbs test at `significance`.
std::vector<std::size_t> detect_outlying_set(const MeasurementEnsemble& ensemble,
                                             double significance = 0.01);

// Piecewise-linear function of z on strictly increasing nodes. Evaluation
// outside [z_min, z_max] throws std::out_of_range.
class Curve {
 public:
  Curve() = default;
  Curve(std::vector<double> z, std::vector<double> value);

  double operator()(double z) const;
  double z_min() const { return z_.front(); }
  double z_max() const { return z_.back(); }
  bool empty() const { return z_.empty(); }
  const std::vector<double>& nodes() const { return z_; }
  const std::vector<double>& values() const { return v_; }

 private:
  std::vector<double> z_;
  std::vector<double> v_;
};

// Student-t half-width of each bin mean, t_{(1+c)/2, dof} s / sqrt(n), then
// a moving median over 11 adjacent bins.
Curve random_error_curve(const BinnedStats& binned, double confidence);

enum class Distribution { Normal, Student, Uniform };
std::string_view to_string(Distribution d);
// Throws std::invalid_argument on an unknown tag.
Distribution parse_distribution(std::string_view tag);

// Per-point components are redrawn for every measured point; per-ensemble
// components are drawn once and shared by all points of an ensemble.
enum class Scope { PerPoint, PerEnsemble };

// Multiplier applied to a component's magnitude as a function of z.
// Either a power law (z / z_ref)^exponent or linear interpolation between
// knots (held constant beyond the end knots).
class ZProfile {
 public:
  ZProfile() = default;
  static ZProfile power(double z_ref, double exponent);
  static ZProfile knots(std::vector<std::pair<double, double>> z_factor);

  double operator()(double z) const;
  bool is_constant() const { return knots_.empty() && exponent_ == 0.0; }

 private:
  double z_ref_ = 1.0;
  double exponent_ = 0.0;
  std::vector<std::pair<double, double>> knots_;
};

struct ErrorComponent {
  std::string label;
  Distribution distribution = Distribution::Normal;
  double magnitude = 0.0;  // sigma (normal, student) or half-range (uniform)
  bool relative = true;    // fraction of |P| when true, Pa otherwise
  int dof = 0;             // student only
  Scope scope = Scope::PerEnsemble;
  ZProfile profile;
};

struct ErrorBudget {
  std::vector<ErrorComponent> components;

  void validate() const;
  ErrorBudget only(Scope scope) const;
};

// Half-width of one component at the given confidence (0.95 or 0.99).
double component_half_width(const ErrorComponent& c, double abs_pressure, double confidence,
                            double z = std::numeric_limits<double>::quiet_NaN());

// min(sum h, 1.1 sqrt(sum h^2)).
double combine_half_widths(std::span<const double> half_widths);

// Total half-width in Pa. z is required when a component has a z profile.
double combine_errors(const ErrorBudget& budget, double abs_pressure, double confidence,
                      double z = std::numeric_limits<double>::quiet_NaN());

// {z/R uniform, optical_rel uniform, 4 dz / z normal with 1.96 sigma = 4 dz / z}.
ErrorBudget theory_budget(const SphereGeometry& sphere, double dz, double optical_rel);

// Relative theoretical error at z, combined at the given confidence.
double theory_error_curve(double z, const SphereGeometry& sphere, double dz, double optical_rel,
                          double confidence = 0.95);

struct BandPoint {
  double z = 0.0;
  double half_width = 0.0;  // Pa
};

struct ConfidenceBand {
  std::vector<BandPoint> entries;
  double confidence = 0.95;

  void validate() const;
  double half_width_at(double z) const;  // linear interpolation, throws outside
  double z_min() const { return entries.front().z; }
  double z_max() const { return entries.back().z; }
  ConfidenceBand scaled(double factor) const;
};

// Random half-width combined per bin with the per-ensemble experimental
// components, evaluated at the bin's mean |P|.
Curve experimental_error_curve(const BinnedStats& binned, const ErrorBudget& systematic,
                               double confidence);

// Half-width at each model-curve node inside the experimental range:
// combination of theory_rel(z) |P(z)| and expt_abs(z).
ConfidenceBand confidence_band(const std::function<double(double)>& theory_rel,
                               const Curve& expt_abs, const PressureCurve& model_curve,
                               double confidence);

struct Difference {
  double z = 0.0;
  double value = 0.0;  // P_theory - P_expt, Pa
};

// Mean of P_theory(z_i) - P_i over each bin of the ensemble.
std::vector<Difference> binned_differences(const MeasurementEnsemble& ensemble,
                                           const PressureCurve& model_curve);

struct ExclusionOptions {
  double window_width = 20e-9;  // m, windows aligned to multiples of this
  double threshold = 0.5;       // excluded when the outside fraction exceeds it
  int min_points = 3;           // windows with fewer points are not judged
};

struct WindowFlag {
  double z_lo = 0.0;
  double z_hi = 0.0;
  int points = 0;
  int outside = 0;
  bool excluded = false;
};

struct ZRange {
  double z_min = 0.0;
  double z_max = 0.0;
};

struct ExclusionVerdict {
  std::string model;
  double confidence = 0.95;
  std::size_t points = 0;
  std::size_t outside = 0;
  double fraction_outside = 0.0;
  double positive_fraction = 0.0;  // share of differences > 0
  std::vector<WindowFlag> windows;
  // Runs of adjacent excluded windows, as the z extent of their points.
  std::vector<ZRange> excluded_windows;
  bool accepted = true;
};

ExclusionVerdict exclusion_test(const std::vector<Difference>& differences,
                                const ConfidenceBand& band, const ExclusionOptions& opt = {});

struct PlantedOffset {
  std::size_t set = 0;
  double sigmas = 0.0;  // in units of the per-point standard deviation
};

struct SyntheticOptions {
  int n_sets = 14;
  int points_per_set = 290;
  double z_min = 160e-9;
  double z_max = 750e-9;
  double bin_width = 1.2e-9;
  std::uint64_t seed = 1;
  std::vector<PlantedOffset> planted;
};

// Points at z_k = z_min + (k + u_k)(z_max - z_min)/n with u_k uniform, so
// each set covers the range evenly. Per-ensemble components are drawn once
// from the seed, per-point components from a seed derived per set.
MeasurementEnsemble generate_synthetic_ensemble(const PressureCurve& model_curve,
                                                const ErrorBudget& noise,
                                                const SyntheticOptions& opt);
// Same, tabulating the model on a 1 nm grid at the given temperature.
MeasurementEnsemble generate_synthetic_ensemble(const ReflectionModel& model,
                                                const ErrorBudget& noise,
                                                const SyntheticOptions& opt,
                                                double temperature = 300.0);

// "set_index,z_m,pressure_Pa" with a header row; '#' lines are comments.
void write_ensemble_csv(std::ostream& out, const MeasurementEnsemble& ensemble);
MeasurementEnsemble read_ensemble_csv(std::string_view text, double bin_width = 1.2e-9);

}  // namespace casimir
