#pragma once

// Finite-temperature Lifshitz pressure and free energy between two
// identical parallel half-spaces, for several reflection prescriptions.

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "casimir/optics.hpp"

namespace casimir {

enum class ReflectionKind {
  Impedance,          // Leontovich impedance; plasma-extrapolated TE term at l = 0
  ExactImpedance,     // polarization-dependent impedances on the mass shell
  LifshitzDrude,      // permittivity coefficients; TE term vanishes at l = 0
  LifshitzSchwinger,  // permittivity coefficients; ideal-metal l = 0 term
  LifshitzPlasma,     // permittivity coefficients; plasma limit at l = 0
  IdealMetal,
};

std::string_view to_string(ReflectionKind kind);
std::optional<ReflectionKind> parse_reflection_kind(std::string_view name);
const std::vector<ReflectionKind>& all_reflection_kinds();

struct ReflectionModel {
  ReflectionKind kind = ReflectionKind::IdealMetal;
  std::optional<PermittivityFn> permittivity;  // unused by IdealMetal
  double omega_p = 0.0;                        // rad/s; l = 0 rule of Impedance kinds and LifshitzPlasma

  static ReflectionModel ideal_metal();
  static ReflectionModel make(ReflectionKind kind, PermittivityFn permittivity, double omega_p);

  // Throws std::invalid_argument when a required ingredient is missing.
  void validate() const;
};

struct ReflectionSq {
  double par = 0.0;   // r_par^2 (TM)
  double perp = 0.0;  // r_perp^2 (TE)
};

// Reflection coefficients at one Matsubara level, with eps(i xi_l)
// evaluated once at construction.
class LevelReflection {
 public:
  LevelReflection(const ReflectionModel& model, double xi, int l);

  // k_perp and q = sqrt(k_perp^2 + xi^2/c^2), both in 1/m.
  ReflectionSq operator()(double k_perp, double q) const;

  double epsilon() const { return eps_; }

 private:
  ReflectionKind kind_;
  double xi_;
  int l_;
  double eps_ = 1.0;
  double impedance_ = 1.0;
  double omega_p_ = 0.0;
};

double matsubara_frequency(double temperature, int l);

ReflectionSq reflection_sq(const ReflectionModel& model, double xi, double k_perp, int l);

struct ThermalState {
  double temperature = 300.0;  // K
  int l_max = 1;
  double quad_tol = 1e-9;  // relative

  void validate() const;
};

// Smallest l_max with xi_{l_max} >= 30 c / (2 z).
int default_l_max(double temperature, double z);
// default_l_max, extended by ln(1e-9 / quad_tol) in 2 xi z / c when
// quad_tol is tighter than 1e-9.
ThermalState default_thermal_state(double temperature, double z, double quad_tol = 1e-9);

struct LifshitzResult {
  double value = 0.0;        // Pa for pressure, J/m^2 for free energy
  double tail_bound = 0.0;   // bound on the omitted l > l_max terms, same unit
  double quad_error = 0.0;   // summed quadrature error estimate, same unit
  int l_max = 0;
};

class TruncationError : public std::runtime_error {
 public:
  TruncationError(const std::string& what, double tail_bound)
      : std::runtime_error(what), tail_bound_(tail_bound) {}
  double tail_bound() const { return tail_bound_; }

 private:
  double tail_bound_;
};

// Generic reflection callback: (xi_l, k_perp, l) -> squared coefficients.
using ReflectionFn = std::function<ReflectionSq(double xi, double k_perp, int l)>;

LifshitzResult casimir_pressure_detailed(const ReflectionModel& model, double z,
                                         const ThermalState& state);
LifshitzResult casimir_pressure_detailed(const ReflectionFn& reflection, double z,
                                         const ThermalState& state);
double casimir_pressure(const ReflectionModel& model, double z, const ThermalState& state);

LifshitzResult casimir_free_energy_detailed(const ReflectionModel& model, double z,
                                            const ThermalState& state);
LifshitzResult casimir_free_energy_detailed(const ReflectionFn& reflection, double z,
                                            const ThermalState& state);
double casimir_free_energy(const ReflectionModel& model, double z, const ThermalState& state);

struct EntropyPoint {
  double temperature = 0.0;  // K
  double entropy = 0.0;      // J / (m^2 K)
};

// S(T) = -dF/dT by central differences with step max(0.02 T, 0.05 K) and
// one Richardson refinement. `temperatures` must be strictly descending.
std::vector<EntropyPoint> entropy_probe(const ReflectionModel& model, double z,
                                        const std::vector<double>& temperatures,
                                        double quad_tol = 1e-11);

struct PressurePoint {
  double z = 0.0;                 // m
  double pressure = 0.0;          // Pa
  double rel_theory_error = 0.0;  // dimensionless
};

struct PressureCurve {
  std::vector<PressurePoint> entries;
  std::string model_tag;

  void validate() const;
  // pressure_at interpolates log|P| against log z between nodes of equal
  // sign (linearly otherwise); rel_error_at is linear. Both throw outside
  // the tabulated range.
  double pressure_at(double z) const;
  double rel_error_at(double z) const;
  double z_min() const { return entries.front().z; }
  double z_max() const { return entries.back().z; }
};

// Pressure at each z (strictly increasing), l_max chosen per point.
// Evaluated on `threads` workers; output does not depend on the count.
PressureCurve compute_pressure_curve(const ReflectionModel& model, const std::vector<double>& zs,
                                     double temperature, double quad_tol = 1e-9,
                                     unsigned threads = 0);

}  // namespace casimir
