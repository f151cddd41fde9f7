#pragma once

// Yukawa-type corrections to Newtonian gravity: point-mass potential,
// pressure between layered plates, a brute-force depth integrator and
// constraint curves alpha_max(lambda) from a confidence band.

#include <string>
#include <string_view>
#include <vector>

#include "casimir/metrology.hpp"

namespace casimir {

struct YukawaParams {
  double alpha_g = 1.0;
  double lambda = 1e-7;  // m

  void validate() const;
};

struct Layer {
  double density = 0.0;    // kg/m^3
  double thickness = 0.0;  // m; ignored for the semi-infinite terminal layer
  bool semi_infinite = false;
};

// Layers listed from the facing surface inward; exactly the last one is
// semi-infinite.
struct LayerStack {
  std::vector<Layer> layers;
  std::string label;

  void validate() const;
  // rho_1 - sum_k (rho_k - rho_{k+1}) exp(-D_k / lambda), D_k the depth of
  // the k-th interface.
  double phi(double lambda) const;
  // Density at depth d >= 0 below the surface; interfaces belong to the
  // deeper layer.
  double density_at(double depth) const;
};

namespace densities {
inline constexpr double kGold = 19.28e3;
inline constexpr double kTitanium = 4.51e3;
inline constexpr double kSapphire = 4.1e3;
inline constexpr double kPlatinum = 21.47e3;
inline constexpr double kSilicon = 2.33e3;
}  // namespace densities

// Au(200 nm) / Ti(10 nm) / Al2O3 and Au(150 nm) / Pt(10 nm) / Si.
LayerStack sphere_stack_default();
LayerStack plate_stack_default();

// V = -(G m1 m2 / r)(1 + alpha exp(-r / lambda)).
double yukawa_point_potential(double m1, double m2, double r, const YukawaParams& params);

// P = -2 pi G alpha lambda^2 exp(-z / lambda) phi_a phi_b.
double yukawa_plate_pressure(const LayerStack& a, const LayerStack& b, double z,
                             const YukawaParams& params);

// Same pressure by adaptive double quadrature over depth in both stacks,
// cut where exp(-depth / lambda) < 1e-16. Throws QuadratureError.
double yukawa_pressure_oracle(const LayerStack& a, const LayerStack& b, double z,
                              const YukawaParams& params, double rel_tol = 1e-12);

struct ConstraintPoint {
  double lambda = 0.0;     // m
  double alpha_max = 0.0;
  double z_best = 0.0;     // m
};

struct ConstraintCurve {
  std::vector<ConstraintPoint> entries;
  std::vector<std::string> warnings;
};

struct ConstraintOptions {
  int coarse_points = 60;       // log-spaced z grid before golden-section refinement
  double plate_size = 3.5e-6;   // m; lambda above plate_size / 5 is flagged
};

// alpha_max(lambda) = min_z half_width(z) / |P_yukawa(z; alpha = 1, lambda)|
// over the band's z range.
ConstraintCurve constraint_curve(const ConfidenceBand& band, const LayerStack& a,
                                 const LayerStack& b, const std::vector<double>& lambdas,
                                 const ConstraintOptions& opt = {});

// constraint_curve with a constant half-width sigma over [z_grid.front(), z_grid.back()].
ConstraintCurve legacy_rms_constraint(double sigma, const LayerStack& a, const LayerStack& b,
                                      const std::vector<double>& z_grid,
                                      const std::vector<double>& lambdas,
                                      const ConstraintOptions& opt = {});

struct StackPair {
  LayerStack sphere;
  LayerStack plate;
};

// "[sphere]" and "[plate]" sections of "density_kg_m3 thickness_nm" rows,
// the last row of each with thickness "inf"; '#' comments.
StackPair parse_stacks(std::string_view text);
StackPair load_stacks(const std::string& path);

}  // namespace casimir
