#include "casimir/hypforce.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "casimir/constants.hpp"
#include "casimir/quadrature.hpp"

namespace casimir {

namespace {

constexpr double kG = constants::kGravitational;
constexpr double kPi = constants::kPi;

// Depth beyond which exp(-d / lambda) < 1e-16.
double cutoff_depth(double lambda) { return lambda * std::log(1e16); }

std::vector<double> interfaces_within(const LayerStack& s, double depth) {
  std::vector<double> br = {0.0};
  double d = 0.0;
  for (std::size_t k = 0; k + 1 < s.layers.size(); ++k) {
    d += s.layers[k].thickness;
    if (d >= depth) break;
    br.push_back(d);
  }
  br.push_back(depth);
  return br;
}

}  // namespace

void YukawaParams::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("yukawa: lambda must be > 0");
  if (!std::isfinite(alpha_g)) throw std::invalid_argument("yukawa: alpha_g must be finite");
}

void LayerStack::validate() const {
  const std::string name = label.empty() ? "layer stack" : "layer stack '" + label + "'";
  if (layers.empty()) throw std::invalid_argument(name + ": no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    if (!(l.density > 0.0)) throw std::invalid_argument(name + ": densities must be > 0");
    const bool last = k + 1 == layers.size();
    if (l.semi_infinite != last) {
      throw std::invalid_argument(name + ": exactly the last layer must be semi-infinite");
    }
    if (!last && !(l.thickness > 0.0 && std::isfinite(l.thickness))) {
      throw std::invalid_argument(name + ": finite layers need thickness > 0");
    }
  }
}

double LayerStack::phi(double lambda) const {
  validate();
  double out = layers.front().density;
  double depth = 0.0;
  for (std::size_t k = 0; k + 1 < layers.size(); ++k) {
    depth += layers[k].thickness;
    out -= (layers[k].density - layers[k + 1].density) * std::exp(-depth / lambda);
  }
  return out;
}

double LayerStack::density_at(double depth) const {
  double d = 0.0;
  for (std::size_t k = 0; k + 1 < layers.size(); ++k) {
    d += layers[k].thickness;
    if (depth < d) return layers[k].density;
  }
  return layers.back().density;
}

LayerStack sphere_stack_default() {
  return {{{densities::kGold, 200e-9, false},
           {densities::kTitanium, 10e-9, false},
           {densities::kSapphire, 0.0, true}},
          "sphere"};
}

LayerStack plate_stack_default() {
  return {{{densities::kGold, 150e-9, false},
           {densities::kPlatinum, 10e-9, false},
           {densities::kSilicon, 0.0, true}},
          "plate"};
}

double yukawa_point_potential(double m1, double m2, double r, const YukawaParams& params) {
  params.validate();
  if (!(r > 0.0)) throw std::invalid_argument("yukawa_point_potential: r must be > 0");
  return -(kG * m1 * m2 / r) * (1.0 + params.alpha_g * std::exp(-r / params.lambda));
}

double yukawa_plate_pressure(const LayerStack& a, const LayerStack& b, double z,
                             const YukawaParams& params) {
  params.validate();
  if (!(z > 0.0)) throw std::invalid_argument("yukawa_plate_pressure: z must be > 0");
  const double l = params.lambda;
  return -2.0 * kPi * kG * params.alpha_g * l * l * std::exp(-z / l) * a.phi(l) * b.phi(l);
}

double yukawa_pressure_oracle(const LayerStack& a, const LayerStack& b, double z,
                              const YukawaParams& params, double rel_tol) {
  params.validate();
  a.validate();
  b.validate();
  if (!(z > 0.0)) throw std::invalid_argument("yukawa_pressure_oracle: z must be > 0");
  const double l = params.lambda;
  const double cut = cutoff_depth(l);
  const auto br_a = interfaces_within(a, cut);
  const auto br_b = interfaces_within(b, cut);
  quad::Options opt;
  opt.rel_tol = rel_tol;
  opt.abs_tol = 0.0;
  opt.max_intervals = 2000;

  // Depths in units of lambda keep the integrand O(1).
  std::vector<double> sa, sb;
  for (double d : br_a) sa.push_back(d / l);
  for (double d : br_b) sb.push_back(d / l);
  const double scale = a.layers.front().density * b.layers.front().density;
  double worst = 0.0;
  auto outer = [&](double ua) {
    const double ra = a.density_at(ua * l);
    auto inner = [&](double ub) {
      return ra * b.density_at(ub * l) / scale * std::exp(-(ua + ub));
    };
    const auto r = quad::integrate(inner, std::span<const double>(sb), opt);
    if (!r.converged) worst = std::max(worst, r.error);
    return r.value;
  };
  const auto r = quad::integrate(outer, std::span<const double>(sa), opt);
  if (!r.converged || worst > 0.0) {
    throw QuadratureError("yukawa_pressure_oracle: depth quadrature did not converge",
                          std::max(r.error, worst));
  }
  // -2 pi G alpha lambda * (1/lambda) * lambda^2 (du_a du_b) * e^{-z/lambda}
  return -2.0 * kPi * kG * params.alpha_g * l * l * std::exp(-z / l) * scale * r.value;
}

namespace {

double golden_min(const std::function<double(double)>& f, double lo, double hi, double& fx) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && (hi - lo) > 1e-6 * (std::abs(lo) + std::abs(hi)); ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = f(x2);
    }
  }
  if (f1 < f2) {
    fx = f1;
    return x1;
  }
  fx = f2;
  return x2;
}

}  // namespace

ConstraintCurve constraint_curve(const ConfidenceBand& band, const LayerStack& a,
                                 const LayerStack& b, const std::vector<double>& lambdas,
                                 const ConstraintOptions& opt) {
  band.validate();
  a.validate();
  b.validate();
  if (opt.coarse_points < 3) throw std::invalid_argument("constraint: coarse_points must be >= 3");
  ConstraintCurve out;
  const double zlo = band.z_min(), zhi = band.z_max();
  if (!(zlo > 0.0)) throw std::invalid_argument("constraint: band must start at z > 0");
  std::vector<double> grid(opt.coarse_points);
  for (int i = 0; i < opt.coarse_points; ++i) {
    grid[i] = zlo * std::pow(zhi / zlo, static_cast<double>(i) / (opt.coarse_points - 1));
  }
  grid.back() = zhi;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    const double lam = lambdas[k];
    if (!(lam > 0.0)) throw std::invalid_argument("constraint: lambdas must be > 0");
    if (k > 0 && !(lam > lambdas[k - 1])) {
      throw std::invalid_argument("constraint: lambdas must be strictly increasing");
    }
    const YukawaParams unit{1.0, lam};
    if (yukawa_plate_pressure(a, b, zlo, unit) == 0.0) {
      throw std::invalid_argument("constraint: Yukawa pressure vanishes at lambda=" +
                                  std::to_string(lam));
    }
    // Work with log(alpha) so the exponential factor stays representable.
    const double pref = std::log(2.0 * kPi * kG * lam * lam * std::abs(a.phi(lam) * b.phi(lam)));
    auto objective = [&](double z) {
      return std::log(band.half_width_at(z)) + z / lam - pref;
    };
    std::size_t best = 0;
    double fbest = objective(grid[0]);
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const double f = objective(grid[i]);
      if (f < fbest) {
        fbest = f;
        best = i;
      }
    }
    const double lo = grid[best == 0 ? 0 : best - 1];
    const double hi = grid[std::min(best + 1, grid.size() - 1)];
    double zbest = grid[best];
    double fref = 0.0;
    const double zr = golden_min(objective, lo, hi, fref);
    if (fref < fbest) {
      fbest = fref;
      zbest = zr;
    }
    out.entries.push_back({lam, std::exp(fbest), zbest});
    if (lam > opt.plate_size / 5.0) {
      std::ostringstream msg;
      msg << "lambda=" << lam << " m exceeds plate size / 5 (" << opt.plate_size / 5.0
          << " m); finite-size effects are not modelled";
      out.warnings.push_back(msg.str());
    }
  }
  return out;
}

ConstraintCurve legacy_rms_constraint(double sigma, const LayerStack& a, const LayerStack& b,
                                      const std::vector<double>& z_grid,
                                      const std::vector<double>& lambdas,
                                      const ConstraintOptions& opt) {
  if (!(sigma > 0.0)) throw std::invalid_argument("legacy constraint: sigma must be > 0");
  if (z_grid.size() < 2 || !(z_grid.back() > z_grid.front())) {
    throw std::invalid_argument("legacy constraint: z grid needs an increasing range");
  }
  ConfidenceBand flat;
  flat.entries = {{z_grid.front(), sigma}, {z_grid.back(), sigma}};
  return constraint_curve(flat, a, b, lambdas, opt);
}

StackPair parse_stacks(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  LayerStack* cur = nullptr;
  StackPair out;
  out.sphere.label = "sphere";
  out.plate.label = "plate";
  bool seen_sphere = false, seen_plate = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = line.substr(0, line.find('#'));
    std::istringstream f(line);
    std::string first;
    if (!(f >> first)) continue;
    if (first == "[sphere]") {
      cur = &out.sphere;
      seen_sphere = true;
      continue;
    }
    if (first == "[plate]") {
      cur = &out.plate;
      seen_plate = true;
      continue;
    }
    auto fail = [&](const std::string& why) {
      return std::invalid_argument("stack file line " + std::to_string(line_no) + ": " + why);
    };
    if (!cur) throw fail("layer before a [sphere] or [plate] section");
    std::string thick, extra;
    if (!(f >> thick) || (f >> extra)) throw fail("expected 'density_kg_m3 thickness_nm'");
    Layer l;
    try {
      std::size_t used = 0;
      l.density = std::stod(first, &used);
      if (used != first.size()) throw std::invalid_argument(first);
      if (thick == "inf") {
        l.semi_infinite = true;
      } else {
        l.thickness = std::stod(thick, &used) * 1e-9;
        if (used != thick.size()) throw std::invalid_argument(thick);
      }
    } catch (const std::exception&) {
      throw fail("malformed number");
    }
    cur->layers.push_back(l);
  }
  if (!seen_sphere || !seen_plate) {
    throw std::invalid_argument("stack file: both [sphere] and [plate] sections are required");
  }
  out.sphere.validate();
  out.plate.validate();
  return out;
}

StackPair load_stacks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stack file '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  try {
    return parse_stacks(s.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

}  // namespace casimir
