#pragma once

// Tabulated optical data, the dispersion transform to the imaginary
// frequency axis, analytic permittivity models and the Leontovich
// surface impedance.

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace casimir {

struct OpticalPoint {
  double omega = 0.0;  // rad/s
  double n = 0.0;
  double k = 0.0;
};

class OpticalDataset {
 public:
  // Sorts by omega and validates: at least two points, omega > 0 and
  // distinct, n >= 0, k >= 0. Throws std::invalid_argument otherwise.
  OpticalDataset(std::vector<OpticalPoint> points, std::string metal_name = {},
                 std::string source = {});

  const std::vector<OpticalPoint>& points() const { return points_; }
  const std::string& metal_name() const { return metal_name_; }
  const std::string& source() const { return source_; }
  std::size_t size() const { return points_.size(); }
  double omega_min() const { return points_.front().omega; }
  double omega_max() const { return points_.back().omega; }

  // Im eps(omega) = 2 n k, log-log interpolated inside the table. Zero
  // outside the tabulated range; callers add their own extensions.
  double imag_permittivity(double omega) const;

 private:
  std::vector<OpticalPoint> points_;
  std::string metal_name_;
  std::string source_;
};

enum class FrequencyUnit { ElectronVolt, RadPerSecond, Micrometer };

std::optional<FrequencyUnit> parse_frequency_unit(std::string_view text);
std::string_view to_string(FrequencyUnit unit);

// Converts a first-column value into angular frequency, rad/s.
double to_angular_frequency(double value, FrequencyUnit unit);

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int row, int line)
      : std::runtime_error(what), row_(row), line_(line) {}
  int row() const { return row_; }    // 1-based data row, 0 if not row-specific
  int line() const { return line_; }  // 1-based text line, 0 if not row-specific

 private:
  int row_;
  int line_;
};

// Parses "x n k" rows (whitespace or comma separated, '#' comments). The
// unit is `unit` when given, otherwise the "#unit: eV|rad/s|um" header.
OpticalDataset load_optical_table(std::string_view raw_text,
                                  std::optional<FrequencyUnit> unit = std::nullopt,
                                  std::string source = {});
OpticalDataset load_optical_table_file(const std::string& path,
                                       std::optional<FrequencyUnit> unit = std::nullopt);

// Writes a table readable by load_optical_table, with a "#unit:" header.
void write_optical_table(std::ostream& out, const OpticalDataset& data, FrequencyUnit unit);

struct DrudeParameters {
  double omega_p = 1.37e16;  // rad/s
  double gamma = 5.3e13;     // rad/s; 0 reduces to the plasma model

  void validate() const;
};

// Synthetic table with n + i k = sqrt(eps_Drude(omega)) on a log grid.
OpticalDataset synthesize_drude_dataset(const DrudeParameters& drude, double omega_min,
                                        double omega_max, int points_per_decade,
                                        std::string metal_name = "Drude");

struct DispersionOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-9;
  int max_intervals = 20000;
};

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double achieved_error)
      : std::runtime_error(what), achieved_error_(achieved_error) {}
  double achieved_error() const { return achieved_error_; }

 private:
  double achieved_error_;
};

// eps(i xi) = 1 + (2/pi) Int_0^inf omega Im eps(omega) / (omega^2 + xi^2) d omega.
// Below the table Im eps follows the Drude form (integrated in closed form),
// above it Im eps is zero.
double permittivity_imag_axis(const OpticalDataset& data, const DrudeParameters& drude,
                              double xi, const DispersionOptions& opt = {});

double drude_permittivity(const DrudeParameters& drude, double xi);
double plasma_permittivity(double omega_p, double xi);

// Z = 1/sqrt(eps), in (0, 1].
double leontovich_impedance(double epsilon);

enum class ZeroFrequencyBehavior { DrudeLike, PlasmaLike, Finite };

// eps(i xi) as a callable. Every evaluation checks xi > 0 and eps >= 1.
class PermittivityFn {
 public:
  PermittivityFn(std::string name, ZeroFrequencyBehavior behavior,
                 std::function<double(double)> eval);

  double operator()(double xi) const;
  ZeroFrequencyBehavior zero_frequency() const { return behavior_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  ZeroFrequencyBehavior behavior_;
  std::function<double(double)> eval_;
};

PermittivityFn make_drude_permittivity(const DrudeParameters& drude);
PermittivityFn make_plasma_permittivity(double omega_p);
PermittivityFn make_constant_permittivity(double epsilon);
// Dispersion transform of the table, memoized per xi (thread-safe).
PermittivityFn make_tabulated_permittivity(OpticalDataset data, const DrudeParameters& drude,
                                           const DispersionOptions& opt = {});

}  // namespace casimir
