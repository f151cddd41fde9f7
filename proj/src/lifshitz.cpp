#include "casimir/lifshitz.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

#include "casimir/constants.hpp"
#include "casimir/quadrature.hpp"

namespace casimir {

namespace {

constexpr double kC = constants::kSpeedOfLight;

// Integration runs over u = sqrt(y - y_l), which removes the square-root
// branch of k_perp at the lower limit. Panels end at t = 1, 3, 8, 18, 35, 50.
constexpr std::array<double, 7> kBreaks = {0.0, 1.0, 1.7320508075688772, 2.8284271247461903,
                                           4.242640687119285, 5.916079783099616,
                                           7.0710678118654755};
constexpr double kCut = 50.0;

double sq(double x) { return x * x; }

// r^2 e^{-y} / (1 - r^2 e^{-y})
double photon_occupation(double r2, double y) {
  if (r2 <= 0.0) return 0.0;
  const double a = std::log(r2) - y;
  return std::exp(a) / (-std::expm1(a));
}

// ln(1 - r^2 e^{-y})
double log_transmission(double r2, double y) {
  if (r2 <= 0.0) return 0.0;
  const double a = std::log(r2) - y;
  return a < -std::numbers::ln2 ? std::log1p(-std::exp(a)) : std::log(-std::expm1(a));
}

struct PressureKernel {
  double operator()(double y, const ReflectionSq& r) const {
    if (y <= 0.0) return 0.0;
    return y * y * (photon_occupation(r.par, y) + photon_occupation(r.perp, y));
  }
  // Majorant of Int_Y^inf (kernel) dy for |r| <= 1, times (1 - e^{-Y}).
  static double tail(double Y) { return 2.0 * (Y * Y + 2.0 * Y + 2.0) * std::exp(-Y); }
  // Int_Y^inf of tail(y) dy.
  static double tail_integral(double Y) { return 2.0 * (Y * Y + 4.0 * Y + 6.0) * std::exp(-Y); }
};

struct FreeEnergyKernel {
  double operator()(double y, const ReflectionSq& r) const {
    if (y <= 0.0) return 0.0;
    return y * (log_transmission(r.par, y) + log_transmission(r.perp, y));
  }
  static double tail(double Y) { return 2.0 * (Y + 1.0) * std::exp(-Y); }
  static double tail_integral(double Y) { return 2.0 * (Y + 2.0) * std::exp(-Y); }
};

// Sum'_{l=0}^{l_max} Int_{y_l}^inf kernel dy in the dimensionless y = 2 q z.
template <class Kernel, class LevelFactory>
LifshitzResult matsubara_sum(LevelFactory&& make_level, double z, const ThermalState& st,
                             double prefactor, const char* what) {
  st.validate();
  if (!(z > 0.0)) throw std::invalid_argument(std::string(what) + ": z must be > 0");
  Kernel kernel;
  const double two_z = 2.0 * z;
  const double dy = 2.0 * matsubara_frequency(st.temperature, 1) * z / kC;

  quad::Options opt;
  opt.rel_tol = st.quad_tol;
  opt.abs_tol = 1e-3 * st.quad_tol;
  opt.max_intervals = 4000;

  quad::CompensatedSum total;
  double quad_err = 0.0;
  for (int l = 0; l <= st.l_max; ++l) {
    const double xi = matsubara_frequency(st.temperature, l);
    const double yl = l * dy;
    const auto level = make_level(xi, l);
    auto integrand = [&](double u) {
      const double t = u * u;
      const double y = yl + t;
      const double q = y / two_z;
      const double k = u * std::sqrt(t + 2.0 * yl) / two_z;
      return 2.0 * u * kernel(y, level(k, q));
    };
    const auto res = quad::integrate(integrand, std::span<const double>(kBreaks), opt);
    if (!res.converged) {
      std::ostringstream msg;
      msg << what << ": quadrature failed at l=" << l << ", z=" << z
          << " (achieved error " << res.error << ")";
      throw QuadratureError(msg.str(), res.error);
    }
    const double Y = yl + kCut;
    const double cut_tail = Kernel::tail(Y) / (-std::expm1(-Y));
    const double w = (l == 0) ? 0.5 : 1.0;
    total.add(w * res.value);
    quad_err += w * (res.error + cut_tail);
  }

  // Omitted levels: sum_{l > l_max} f(l dy) <= f(Y) + Int_Y^inf f / dy with
  // f decreasing and Y = (l_max + 1) dy.
  const double Y = (st.l_max + 1) * dy;
  const double tail = (Kernel::tail(Y) + Kernel::tail_integral(Y) / dy) / (-std::expm1(-Y));

  const double sum = total.value();
  LifshitzResult out;
  out.value = prefactor * sum;
  out.tail_bound = std::abs(prefactor) * tail;
  out.quad_error = std::abs(prefactor) * quad_err;
  out.l_max = st.l_max;
  if (tail > st.quad_tol * std::abs(sum) + 1e-3 * st.quad_tol) {
    std::ostringstream msg;
    msg << what << ": Matsubara truncation at l_max=" << st.l_max << " leaves tail bound "
        << out.tail_bound << " at z=" << z << ", above tolerance";
    throw TruncationError(msg.str(), out.tail_bound);
  }
  return out;
}

double pressure_prefactor(double z, double T) {
  return -(constants::kBoltzmann * T / constants::kPi) / (8.0 * z * z * z);
}

double free_energy_prefactor(double z, double T) {
  return (constants::kBoltzmann * T / (2.0 * constants::kPi)) / (4.0 * z * z);
}

}  // namespace

std::string_view to_string(ReflectionKind kind) {
  switch (kind) {
    case ReflectionKind::Impedance: return "Impedance";
    case ReflectionKind::ExactImpedance: return "ExactImpedance";
    case ReflectionKind::LifshitzDrude: return "LifshitzDrude";
    case ReflectionKind::LifshitzSchwinger: return "LifshitzSchwinger";
    case ReflectionKind::LifshitzPlasma: return "LifshitzPlasma";
    case ReflectionKind::IdealMetal: return "IdealMetal";
  }
  return "?";
}

const std::vector<ReflectionKind>& all_reflection_kinds() {
  static const std::vector<ReflectionKind> kinds = {
      ReflectionKind::Impedance,         ReflectionKind::ExactImpedance,
      ReflectionKind::LifshitzDrude,     ReflectionKind::LifshitzSchwinger,
      ReflectionKind::LifshitzPlasma,    ReflectionKind::IdealMetal};
  return kinds;
}

std::optional<ReflectionKind> parse_reflection_kind(std::string_view name) {
  for (auto k : all_reflection_kinds()) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

ReflectionModel ReflectionModel::ideal_metal() { return ReflectionModel{}; }

ReflectionModel ReflectionModel::make(ReflectionKind kind, PermittivityFn permittivity,
                                      double omega_p) {
  ReflectionModel m;
  m.kind = kind;
  m.permittivity = std::move(permittivity);
  m.omega_p = omega_p;
  m.validate();
  return m;
}

void ReflectionModel::validate() const {
  if (kind == ReflectionKind::IdealMetal) return;
  if (!permittivity) {
    throw std::invalid_argument(std::string(to_string(kind)) + " model needs a permittivity");
  }
  const bool needs_wp = kind == ReflectionKind::Impedance ||
                        kind == ReflectionKind::ExactImpedance ||
                        kind == ReflectionKind::LifshitzPlasma;
  if (needs_wp && !(omega_p > 0.0)) {
    throw std::invalid_argument(std::string(to_string(kind)) + " model needs omega_p > 0");
  }
}

LevelReflection::LevelReflection(const ReflectionModel& model, double xi, int l)
    : kind_(model.kind), xi_(xi), l_(l), omega_p_(model.omega_p) {
  if (l < 0) throw std::invalid_argument("reflection: Matsubara index must be >= 0");
  if (l == 0 && xi != 0.0) throw std::invalid_argument("reflection: xi must be 0 at l = 0");
  if (l > 0 && !(xi > 0.0)) throw std::invalid_argument("reflection: xi must be > 0 at l >= 1");
  if (kind_ != ReflectionKind::IdealMetal && l > 0) {
    model.validate();
    eps_ = (*model.permittivity)(xi);
    impedance_ = leontovich_impedance(eps_);
  }
}

ReflectionSq LevelReflection::operator()(double k_perp, double q) const {
  if (kind_ == ReflectionKind::IdealMetal) return {1.0, 1.0};
  if (l_ == 0) {
    switch (kind_) {
      case ReflectionKind::Impedance:
      case ReflectionKind::ExactImpedance: {
        const double ck = kC * k_perp;
        return {1.0, sq((ck - omega_p_) / (ck + omega_p_))};
      }
      case ReflectionKind::LifshitzDrude: return {1.0, 0.0};
      case ReflectionKind::LifshitzSchwinger: return {1.0, 1.0};
      case ReflectionKind::LifshitzPlasma: {
        const double kp2 = sq(omega_p_ / kC);
        const double k0 = std::sqrt(k_perp * k_perp + kp2);
        return {1.0, sq(kp2 / sq(k0 + k_perp))};
      }
      case ReflectionKind::IdealMetal: break;
    }
    return {1.0, 1.0};
  }
  switch (kind_) {
    case ReflectionKind::Impedance: {
      const double cq = kC * q;
      const double zx = impedance_ * xi_;
      const double zc = impedance_ * cq;
      return {sq((cq - zx) / (cq + zx)), sq((zc - xi_) / (zc + xi_))};
    }
    case ReflectionKind::ExactImpedance: {
      const double cq = kC * q;
      const double s2 = sq(k_perp / q);  // sin^2 of the mass-shell incidence angle
      const double f = std::sqrt(1.0 - s2 / eps_);
      const double z_par = impedance_ * f;
      const double z_perp = impedance_ / f;
      const double zx = z_par * xi_;
      const double zc = z_perp * cq;
      return {sq((cq - zx) / (cq + zx)), sq((zc - xi_) / (zc + xi_))};
    }
    case ReflectionKind::LifshitzDrude:
    case ReflectionKind::LifshitzSchwinger:
    case ReflectionKind::LifshitzPlasma: {
      const double extra = (eps_ - 1.0) * sq(xi_ / kC);
      const double kl = std::sqrt(q * q + extra);
      const double eq = eps_ * q;
      return {sq((eq - kl) / (eq + kl)), sq(extra / sq(kl + q))};
    }
    case ReflectionKind::IdealMetal: break;
  }
  return {1.0, 1.0};
}

double matsubara_frequency(double temperature, int l) {
  if (!(temperature > 0.0)) throw std::invalid_argument("matsubara_frequency: T must be > 0");
  if (l < 0) throw std::invalid_argument("matsubara_frequency: l must be >= 0");
  return 2.0 * constants::kPi * constants::kBoltzmann * temperature * l / constants::kHbar;
}

ReflectionSq reflection_sq(const ReflectionModel& model, double xi, double k_perp, int l) {
  if (!(k_perp > 0.0)) throw std::invalid_argument("reflection_sq: k_perp must be > 0");
  const double q = std::sqrt(k_perp * k_perp + sq(xi / kC));
  return LevelReflection(model, xi, l)(k_perp, q);
}

void ThermalState::validate() const {
  if (!(temperature > 0.0)) throw std::invalid_argument("thermal state: temperature must be > 0");
  if (l_max < 1) throw std::invalid_argument("thermal state: l_max must be >= 1");
  if (!(quad_tol > 0.0)) throw std::invalid_argument("thermal state: quad_tol must be > 0");
}

namespace {

int l_max_for(double temperature, double z, double y_target) {
  const double target = y_target * kC / (2.0 * z);
  return std::max(1, static_cast<int>(std::ceil(target / matsubara_frequency(temperature, 1))));
}

}  // namespace

int default_l_max(double temperature, double z) { return l_max_for(temperature, z, 30.0); }

ThermalState default_thermal_state(double temperature, double z, double quad_tol) {
  if (!(quad_tol > 0.0)) throw std::invalid_argument("thermal state: quad_tol must be > 0");
  // The tail falls like e^{-y}; tighter tolerances push the cutoff out.
  const double y_target = 30.0 + std::max(0.0, std::log(1e-9 / quad_tol));
  return ThermalState{temperature, l_max_for(temperature, z, y_target), quad_tol};
}

LifshitzResult casimir_pressure_detailed(const ReflectionModel& model, double z,
                                         const ThermalState& state) {
  model.validate();
  return matsubara_sum<PressureKernel>(
      [&model](double xi, int l) { return LevelReflection(model, xi, l); }, z, state,
      pressure_prefactor(z, state.temperature), "casimir_pressure");
}

LifshitzResult casimir_pressure_detailed(const ReflectionFn& reflection, double z,
                                         const ThermalState& state) {
  return matsubara_sum<PressureKernel>(
      [&reflection](double xi, int l) {
        return [&reflection, xi, l](double k, double) { return reflection(xi, k, l); };
      },
      z, state, pressure_prefactor(z, state.temperature), "casimir_pressure");
}

double casimir_pressure(const ReflectionModel& model, double z, const ThermalState& state) {
  return casimir_pressure_detailed(model, z, state).value;
}

LifshitzResult casimir_free_energy_detailed(const ReflectionModel& model, double z,
                                            const ThermalState& state) {
  model.validate();
  return matsubara_sum<FreeEnergyKernel>(
      [&model](double xi, int l) { return LevelReflection(model, xi, l); }, z, state,
      free_energy_prefactor(z, state.temperature), "casimir_free_energy");
}

LifshitzResult casimir_free_energy_detailed(const ReflectionFn& reflection, double z,
                                            const ThermalState& state) {
  return matsubara_sum<FreeEnergyKernel>(
      [&reflection](double xi, int l) {
        return [&reflection, xi, l](double k, double) { return reflection(xi, k, l); };
      },
      z, state, free_energy_prefactor(z, state.temperature), "casimir_free_energy");
}

double casimir_free_energy(const ReflectionModel& model, double z, const ThermalState& state) {
  return casimir_free_energy_detailed(model, z, state).value;
}

std::vector<EntropyPoint> entropy_probe(const ReflectionModel& model, double z,
                                        const std::vector<double>& temperatures,
                                        double quad_tol) {
  if (!(z > 0.0)) throw std::invalid_argument("entropy_probe: z must be > 0");
  for (std::size_t i = 0; i < temperatures.size(); ++i) {
    if (!(temperatures[i] > 0.0)) {
      throw std::invalid_argument("entropy_probe: temperatures must be > 0");
    }
    if (i > 0 && !(temperatures[i] < temperatures[i - 1])) {
      throw std::invalid_argument("entropy_probe: temperatures must be strictly descending");
    }
  }
  std::vector<EntropyPoint> out;
  out.reserve(temperatures.size());
  for (double T : temperatures) {
    const double step = std::max(0.02 * T, 0.05);
    if (!(T - step > 0.0)) {
      throw std::invalid_argument("entropy_probe: finite-difference step underflows at T=" +
                                  std::to_string(T) + " K");
    }
    // One l_max for the whole stencil keeps F(T) smooth across it.
    const double y_target = 45.0;
    const double xi1 = matsubara_frequency(T - step, 1);
    const int l_max = std::max(1, static_cast<int>(std::ceil(y_target * kC / (2.0 * z * xi1))));
    auto F = [&](double t) {
      return casimir_free_energy(model, z, ThermalState{t, l_max, quad_tol});
    };
    auto central = [&](double h) { return -(F(T + h) - F(T - h)) / (2.0 * h); };
    const double coarse = central(step);
    const double fine = central(0.5 * step);
    out.push_back({T, (4.0 * fine - coarse) / 3.0});
  }
  return out;
}

void PressureCurve::validate() const {
  if (entries.empty()) throw std::invalid_argument("pressure curve is empty");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!(entries[i].rel_theory_error >= 0.0)) {
      throw std::invalid_argument("pressure curve: negative relative theory error");
    }
    if (i > 0 && !(entries[i].z > entries[i - 1].z)) {
      throw std::invalid_argument("pressure curve: z must be strictly increasing");
    }
  }
}

namespace {

template <class Get>
double interp_curve(const std::vector<PressurePoint>& e, double z, Get get) {
  if (e.empty()) throw std::out_of_range("pressure curve is empty");
  if (z < e.front().z || z > e.back().z) {
    throw std::out_of_range("pressure curve: z outside tabulated range");
  }
  if (e.size() == 1) return get(e.front());
  auto it = std::lower_bound(e.begin(), e.end(), z,
                             [](const PressurePoint& p, double v) { return p.z < v; });
  if (it == e.begin() || it->z == z) return get(*it);
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double t = (z - lo.z) / (hi.z - lo.z);
  return get(lo) + t * (get(hi) - get(lo));
}

}  // namespace

double PressureCurve::pressure_at(double z) const {
  if (entries.size() > 1 && z >= entries.front().z && z <= entries.back().z) {
    auto it = std::lower_bound(entries.begin(), entries.end(), z,
                               [](const PressurePoint& p, double v) { return p.z < v; });
    if (it != entries.begin() && it->z != z) {
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      // Power-law-like pressures interpolate far better in log-log.
      if (lo.z > 0.0 && lo.pressure * hi.pressure > 0.0) {
        const double t = std::log(z / lo.z) / std::log(hi.z / lo.z);
        return lo.pressure * std::exp(t * std::log(hi.pressure / lo.pressure));
      }
    }
  }
  return interp_curve(entries, z, [](const PressurePoint& p) { return p.pressure; });
}

double PressureCurve::rel_error_at(double z) const {
  return interp_curve(entries, z, [](const PressurePoint& p) { return p.rel_theory_error; });
}

PressureCurve compute_pressure_curve(const ReflectionModel& model, const std::vector<double>& zs,
                                     double temperature, double quad_tol, unsigned threads) {
  model.validate();
  for (std::size_t i = 0; i < zs.size(); ++i) {
    if (!(zs[i] > 0.0)) throw std::invalid_argument("pressure curve: z must be > 0");
    if (i > 0 && !(zs[i] > zs[i - 1])) {
      throw std::invalid_argument("pressure curve: z grid must be strictly increasing");
    }
  }
  PressureCurve curve;
  curve.model_tag = std::string(to_string(model.kind));
  curve.entries.resize(zs.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(zs.size(), 1)));

  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](unsigned worker) {
    try {
      for (std::size_t i = worker; i < zs.size(); i += threads) {
        const auto st = default_thermal_state(temperature, zs[i], quad_tol);
        curve.entries[i] = {zs[i], casimir_pressure(model, zs[i], st), 0.0};
      }
    } catch (...) {
      errors[worker] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return curve;
}

}  // namespace casimir
