#include <cmath>
#include <vector>

#include "casimir/lifshitz.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace casimir;

namespace {

ReflectionModel model(ReflectionKind k) {
  DrudeParameters p;
  if (k == ReflectionKind::IdealMetal) return ReflectionModel::ideal_metal();
  return ReflectionModel::make(k, make_drude_permittivity(p), p.omega_p);
}

}  // namespace

TEST_CASE("Matsubara frequencies") {
  CHECK(matsubara_frequency(300, 1) == doctest::Approx(2.468e14).epsilon(1e-3));
  CHECK(matsubara_frequency(300, 0) == 0.0);
  CHECK_THROWS(matsubara_frequency(0, 1));
}

TEST_CASE("ideal metal at low temperature approaches the T = 0 law") {
  const auto m = ReflectionModel::ideal_metal();
  const double z = 1e-6;
  const auto st = default_thermal_state(1.0, z);
  CHECK(casimir_pressure(m, z, st) == doctest::Approx(-1.300e-3).epsilon(1e-3));
  CHECK(casimir_pressure(m, z, st) == doctest::Approx(oracle::ideal_pressure_t0(z)).epsilon(1e-6));
  CHECK(casimir_free_energy(m, z, st) == doctest::Approx(-4.335e-10).epsilon(1e-3));
  CHECK(casimir_free_energy(m, z, st) ==
        doctest::Approx(oracle::ideal_free_energy_t0(z)).epsilon(1e-6));
}

TEST_CASE("ideal metal matches the exact finite-temperature series") {
  const auto m = ReflectionModel::ideal_metal();
  for (double z : {0.2e-6, 1e-6, 3e-6, 5e-6, 8e-6}) {
    for (double T : {77.0, 300.0, 600.0}) {
      CAPTURE(z);
      CAPTURE(T);
      const auto r = casimir_pressure_detailed(m, z, default_thermal_state(T, z, 1e-11));
      CHECK(r.value == doctest::Approx(oracle::ideal_pressure_exact(z, T)).epsilon(1e-9));
    }
  }
}

TEST_CASE("ideal metal classical limit is reached at large separation") {
  const auto m = ReflectionModel::ideal_metal();
  const double T = 300;
  auto rel = [&](double z) {
    const double p = casimir_pressure(m, z, default_thermal_state(T, z));
    return std::abs(p / oracle::ideal_pressure_classical(z, T) - 1.0);
  };
  CHECK(rel(8e-6) < 1e-2);
  CHECK(rel(20e-6) < 1e-6);
  // the l >= 1 levels still contribute about 2% at 5 um
  CHECK(rel(5e-6) == doctest::Approx(0.019).epsilon(0.1));
}

TEST_CASE("pressure is minus the derivative of the free energy") {
  for (auto k : all_reflection_kinds()) {
    const auto m = model(k);
    const double z = 0.4e-6, h = 1e-10;
    const auto st = default_thermal_state(300.0, z - h, 1e-11);
    const double dF = (casimir_free_energy(m, z + h, st) - casimir_free_energy(m, z - h, st)) /
                      (2 * h);
    CAPTURE(to_string(k));
    CHECK(casimir_pressure(m, z, st) == doctest::Approx(-dF).epsilon(1e-6));
  }
}

TEST_CASE("zero-frequency rules") {
  const double k = 1e7;
  auto r0 = [&](ReflectionKind kind) { return reflection_sq(model(kind), 0.0, k, 0); };
  CHECK(r0(ReflectionKind::LifshitzDrude).par == 1.0);
  CHECK(r0(ReflectionKind::LifshitzDrude).perp == 0.0);
  CHECK(r0(ReflectionKind::LifshitzSchwinger).perp == 1.0);
  CHECK(r0(ReflectionKind::IdealMetal).perp == 1.0);
  const double wp = DrudeParameters{}.omega_p;
  const double ck = oracle::c * k;
  CHECK(r0(ReflectionKind::Impedance).perp == doctest::Approx(std::pow((ck - wp) / (ck + wp), 2)));
  CHECK(r0(ReflectionKind::ExactImpedance).perp == r0(ReflectionKind::Impedance).perp);
  const double kp = wp / oracle::c;
  const double k0 = std::sqrt(k * k + kp * kp);
  CHECK(r0(ReflectionKind::LifshitzPlasma).perp ==
        doctest::Approx(std::pow(kp * kp / ((k0 + k) * (k0 + k)), 2)));
  CHECK_THROWS(reflection_sq(model(ReflectionKind::Impedance), 1e14, k, 0));
  CHECK_THROWS(reflection_sq(model(ReflectionKind::Impedance), 0.0, k, 1));
}

TEST_CASE("reflection coefficients lie in [0, 1]") {
  for (auto kind : all_reflection_kinds()) {
    const auto m = model(kind);
    for (int l : {1, 5, 50}) {
      const double xi = matsubara_frequency(300, l);
      for (double k : {1e3, 1e6, 1e7, 1e8, 1e9}) {
        const auto r = reflection_sq(m, xi, k, l);
        CHECK(r.par >= 0.0);
        CHECK(r.par <= 1.0);
        CHECK(r.perp >= 0.0);
        CHECK(r.perp <= 1.0);
      }
    }
  }
}

TEST_CASE("exact and Leontovich impedances differ by at most the angular correction") {
  const auto a = model(ReflectionKind::Impedance);
  const auto b = model(ReflectionKind::ExactImpedance);
  for (int l : {1, 3, 20, 100}) {
    const double xi = matsubara_frequency(300, l);
    const double eps = drude_permittivity(DrudeParameters{}, xi);
    for (double k : {1e4, 1e6, 1e7, 3e7, 1e8}) {
      const double q = std::sqrt(k * k + xi * xi / (oracle::c * oracle::c));
      const double s2 = k * k / (q * q);
      const double bound = (s2 / eps) / (1.0 - s2 / eps);
      const auto ra = reflection_sq(a, xi, k, l);
      const auto rb = reflection_sq(b, xi, k, l);
      CHECK(std::abs(ra.par - rb.par) <= bound + 1e-15);
      CHECK(std::abs(ra.perp - rb.perp) <= bound + 1e-15);
    }
  }
}

TEST_CASE("result is stable when l_max is doubled") {
  for (auto kind : all_reflection_kinds()) {
    const auto m = model(kind);
    const double z = 0.3e-6;
    auto st = default_thermal_state(300, z, 1e-10);
    const double p1 = casimir_pressure(m, z, st);
    st.l_max *= 2;
    const double p2 = casimir_pressure(m, z, st);
    CAPTURE(to_string(kind));
    CHECK(p1 == doctest::Approx(p2).epsilon(1e-9));
  }
}

TEST_CASE("truncation that is too aggressive throws") {
  const auto m = ReflectionModel::ideal_metal();
  CHECK_THROWS_AS(casimir_pressure(m, 0.2e-6, ThermalState{300, 2, 1e-9}), TruncationError);
}

TEST_CASE("model ordering at micrometre separations") {
  for (double z : {1e-6, 2e-6, 4e-6}) {
    const auto st = default_thermal_state(300, z);
    const double s = std::abs(casimir_pressure(model(ReflectionKind::LifshitzSchwinger), z, st));
    const double i = std::abs(casimir_pressure(model(ReflectionKind::Impedance), z, st));
    const double d = std::abs(casimir_pressure(model(ReflectionKind::LifshitzDrude), z, st));
    CAPTURE(z);
    CHECK(s >= i);
    CHECK(i >= d);
  }
}

TEST_CASE("vanishing reflectivity gives zero force and energy") {
  ReflectionFn none = [](double, double, int) { return ReflectionSq{0.0, 0.0}; };
  const auto st = ThermalState{300, 400, 1e-9};
  CHECK(casimir_free_energy_detailed(none, 1e-6, st).value == 0.0);
  CHECK(casimir_pressure_detailed(none, 1e-6, st).value == 0.0);
}

TEST_CASE("callback form agrees with the model form") {
  const auto m = model(ReflectionKind::LifshitzPlasma);
  ReflectionFn f = [&](double xi, double k, int l) { return reflection_sq(m, xi, k, l); };
  const double z = 0.5e-6;
  const auto st = default_thermal_state(300, z, 1e-10);
  CHECK(casimir_pressure_detailed(f, z, st).value ==
        doctest::Approx(casimir_pressure(m, z, st)).epsilon(1e-9));
}

TEST_CASE("Drude-model entropy at low temperature") {
  // With gamma -> 0+ the TE zero-frequency term is still absent, which leaves
  // a nonzero entropy as T -> 0; the plasma and impedance rules do not.
  const double z = 1e-6;
  const std::vector<double> temps = {10.0, 5.0, 2.0, 1.0};
  DrudeParameters p{1.37e16, 0.0};
  auto drude0 = ReflectionModel::make(ReflectionKind::LifshitzDrude, make_drude_permittivity(p),
                                      p.omega_p);
  auto plasma = ReflectionModel::make(ReflectionKind::LifshitzPlasma,
                                      make_plasma_permittivity(p.omega_p), p.omega_p);
  const auto sd = entropy_probe(drude0, z, temps);
  const auto sp = entropy_probe(plasma, z, temps);
  // |S_plasma| shrinks towards 0; S_drude settles on a negative plateau
  CHECK(std::abs(sp.back().entropy) < 0.05 * std::abs(sd.back().entropy));
  CHECK(sd.back().entropy < 0.0);
  CHECK(sd.back().entropy == doctest::Approx(sd[2].entropy).epsilon(0.1));
  CHECK_THROWS(entropy_probe(plasma, z, {1.0, 2.0}));
}

TEST_CASE("pressure curve interpolation and determinism") {
  const auto m = model(ReflectionKind::Impedance);
  const std::vector<double> zs = {0.2e-6, 0.3e-6, 0.4e-6};
  auto a = compute_pressure_curve(m, zs, 300, 1e-9, 1);
  auto b = compute_pressure_curve(m, zs, 300, 1e-9, 3);
  for (std::size_t i = 0; i < zs.size(); ++i) CHECK(a.entries[i].pressure == b.entries[i].pressure);
  const double p0 = a.entries[0].pressure, p1 = a.entries[1].pressure;
  CHECK(a.pressure_at(0.25e-6) ==
        doctest::Approx(p0 * std::pow(p1 / p0, std::log(1.25) / std::log(1.5))));
  CHECK(a.pressure_at(0.3e-6) == p1);
  // log-log interpolation reproduces a pure power law exactly
  PressureCurve pw;
  for (double z : {1e-7, 2e-7, 4e-7}) pw.entries.push_back({z, -1.0 / std::pow(z * 1e7, 4), 0.0});
  CHECK(pw.pressure_at(3e-7) == doctest::Approx(-1.0 / 81.0).epsilon(1e-12));
  CHECK_THROWS_AS(a.pressure_at(0.5e-6), std::out_of_range);
  CHECK_THROWS(compute_pressure_curve(m, {0.3e-6, 0.2e-6}, 300));
}
