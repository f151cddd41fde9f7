#include <cmath>
#include <vector>

#include "casimir/hypforce.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace casimir;

namespace {

LayerStack gold() { return {{{densities::kGold, 0.0, true}}, "Au"}; }

// Eq. for three media written out term by term.
double three_layer_pressure(double z, double lambda) {
  auto ex = [&](double d) { return std::exp(-d / lambda); };
  const double rAu = 19.28e3, rTi = 4.51e3, rAl = 4.1e3, rPt = 21.47e3, rSi = 2.33e3;
  const double ds = 200e-9, dti = 10e-9, dp = 150e-9, dpt = 10e-9;
  const double sphere = rAu - (rAu - rTi) * ex(ds) - (rTi - rAl) * ex(ds + dti);
  const double plate = rAu - (rAu - rPt) * ex(dp) - (rPt - rSi) * ex(dp + dpt);
  return -2 * oracle::pi * oracle::G * lambda * lambda * ex(z) * sphere * plate;
}

ConfidenceBand tightening_band() {
  ConfidenceBand b;
  for (double z = 160e-9; z <= 750e-9 + 1e-12; z += 5e-9) {
    const double rel = 0.012 + 0.2 * std::pow((z - 300e-9) / 450e-9, 2);
    b.entries.push_back({z, rel * 1e-27 / std::pow(z, 4)});
  }
  return b;
}

}  // namespace

TEST_CASE("point potential") {
  const YukawaParams off{0.0, 1.0};
  CHECK(yukawa_point_potential(2.0, 3.0, 0.5, off) == doctest::Approx(-oracle::G * 6 / 0.5));
  const YukawaParams on{1.0, 1.0};
  CHECK(yukawa_point_potential(1, 1, 1, on) == doctest::Approx(-9.129e-11).epsilon(1e-4));
  CHECK(yukawa_point_potential(1, 1, 2.0, YukawaParams{1.0, 2.0}) ==
        doctest::Approx(-(oracle::G / 2.0) * (1 + std::exp(-1.0))));
  CHECK_THROWS(yukawa_point_potential(1, 1, 0.0, on));
}

TEST_CASE("plate pressure closed form") {
  const YukawaParams p{1.0, 100e-9};
  const double expect = -2 * oracle::pi * oracle::G * 1e-14 * 19.28e3 * 19.28e3 * std::exp(-2.0);
  CHECK(yukawa_plate_pressure(gold(), gold(), 200e-9, p) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(yukawa_plate_pressure(gold(), gold(), 200e-9, p) == doctest::Approx(-2.11e-16).epsilon(2e-3));
  const auto s = sphere_stack_default();
  const auto q = plate_stack_default();
  for (double z : {160e-9, 400e-9, 750e-9}) {
    for (double lam : {10e-9, 150e-9, 1e-6}) {
      CHECK(yukawa_plate_pressure(s, q, z, {1.0, lam}) ==
            doctest::Approx(three_layer_pressure(z, lam)).epsilon(1e-13));
    }
  }
  CHECK(s.phi(1e-12) == doctest::Approx(densities::kGold));
  CHECK(s.phi(1e3) == doctest::Approx(densities::kSapphire).epsilon(1e-6));
  CHECK(q.phi(1e3) == doctest::Approx(densities::kSilicon).epsilon(1e-6));
  CHECK(yukawa_plate_pressure(s, q, 300e-9, {0.0, 1e-7}) == 0.0);
  LayerStack bad{{{1.0, 10e-9, false}}, "open"};
  CHECK_THROWS(bad.validate());
  LayerStack two_inf{{{1.0, 0.0, true}, {2.0, 0.0, true}}, "x"};
  CHECK_THROWS(two_inf.validate());
}

TEST_CASE("brute-force depth integral agrees with the closed form") {
  const auto s = sphere_stack_default();
  const auto q = plate_stack_default();
  const YukawaParams p{1.0, 100e-9};
  const double semi = -2 * oracle::pi * oracle::G * 1e-14 * 19.28e3 * 19.28e3 * std::exp(-2.0);
  CHECK(yukawa_pressure_oracle(gold(), gold(), 200e-9, p) == doctest::Approx(semi).epsilon(1e-9));
  CHECK(yukawa_pressure_oracle(s, q, 200e-9, {1.0, 150e-9}) ==
        doctest::Approx(yukawa_plate_pressure(s, q, 200e-9, {1.0, 150e-9})).epsilon(1e-9));
  CHECK(yukawa_pressure_oracle(s, q, 200e-9, {0.0, 150e-9}) == 0.0);
}

TEST_CASE("a finite coating matters less the thinner it is compared with lambda") {
  // Removing the 10 nm adhesion layer changes phi by at most
  // |rho_k - rho_k+1| (1 - exp(-10 nm / lambda)) exp(-D / lambda) per interface.
  const auto s = sphere_stack_default();
  LayerStack no_ti{{s.layers[0], {densities::kSapphire, 0.0, true}}, "no Ti"};
  for (double lam : {20e-9, 100e-9, 500e-9}) {
    const double full = s.phi(lam), cut = no_ti.phi(lam);
    const double bound = std::abs(densities::kTitanium - densities::kSapphire) *
                             std::exp(-210e-9 / lam) +
                         std::abs(densities::kGold - densities::kTitanium) *
                             (std::exp(-200e-9 / lam) - std::exp(-210e-9 / lam));
    CHECK(std::abs(full - cut) <= bound * (1 + 1e-12));
    CHECK(full > cut);  // Ti is denser than the sapphire it replaces
  }
}

TEST_CASE("constraint curves") {
  const auto s = sphere_stack_default();
  const auto q = plate_stack_default();
  const auto band = tightening_band();
  std::vector<double> lambdas;
  for (double l = 40e-9; l <= 370e-9 + 1e-12; l += 30e-9) lambdas.push_back(l);
  const auto c = constraint_curve(band, s, q, lambdas);
  REQUIRE(c.entries.size() == lambdas.size());
  for (std::size_t i = 1; i < c.entries.size(); ++i) {
    CHECK(c.entries[i].alpha_max < c.entries[i - 1].alpha_max);
    CHECK(c.entries[i].z_best >= c.entries[i - 1].z_best * (1 - 1e-6));
  }
  CHECK(c.warnings.empty());

  const auto doubled = constraint_curve(band.scaled(2.0), s, q, lambdas);
  for (std::size_t i = 0; i < c.entries.size(); ++i) {
    CHECK(doubled.entries[i].alpha_max == doctest::Approx(2 * c.entries[i].alpha_max).epsilon(1e-9));
  }

  // a finer coarse grid changes alpha_max by less than 1%
  ConstraintOptions fine;
  fine.coarse_points = 400;
  const auto f = constraint_curve(band, s, q, lambdas, fine);
  for (std::size_t i = 0; i < c.entries.size(); ++i) {
    CHECK(f.entries[i].alpha_max == doctest::Approx(c.entries[i].alpha_max).epsilon(0.01));
  }

  // the band method is never weaker than a constant sigma at the band maximum
  double worst = 0.0;
  for (const auto& e : band.entries) worst = std::max(worst, e.half_width);
  const auto legacy = legacy_rms_constraint(worst, s, q, {band.z_min(), band.z_max()}, lambdas);
  for (std::size_t i = 0; i < c.entries.size(); ++i) {
    CHECK(c.entries[i].alpha_max <= legacy.entries[i].alpha_max);
  }
  const auto legacy10 =
      legacy_rms_constraint(10 * worst, s, q, {band.z_min(), band.z_max()}, lambdas);
  CHECK(legacy10.entries[3].alpha_max == doctest::Approx(10 * legacy.entries[3].alpha_max));

  ConfidenceBand flat;
  flat.entries = {{160e-9, 1e-3}, {750e-9, 1e-3}};
  const auto a = constraint_curve(flat, s, q, lambdas);
  const auto b = legacy_rms_constraint(1e-3, s, q, {160e-9, 750e-9}, lambdas);
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].alpha_max == b.entries[i].alpha_max);
    CHECK(a.entries[i].z_best == b.entries[i].z_best);
  }

  const auto one = constraint_curve(band, s, q, {150e-9});
  CHECK(one.entries.size() == 1);
  const auto big = constraint_curve(band, s, q, {1e-6});
  CHECK(big.warnings.size() == 1);
}

TEST_CASE("stack files") {
  const auto p = parse_stacks(
      "# gold on both sides\n[sphere]\n19280 200\n4510 10\n4100 inf\n\n[plate]\n19280 150\n21470 10\n2330 inf\n");
  CHECK(p.sphere.layers.size() == 3);
  CHECK(p.plate.layers[0].thickness == doctest::Approx(150e-9));
  CHECK(p.plate.layers[2].semi_infinite);
  CHECK(yukawa_plate_pressure(p.sphere, p.plate, 300e-9, {1, 1e-7}) ==
        doctest::Approx(yukawa_plate_pressure(sphere_stack_default(), plate_stack_default(), 300e-9,
                                              {1, 1e-7})));
  CHECK_THROWS(parse_stacks("[sphere]\n19280 inf\n"));
  CHECK_THROWS(parse_stacks("[sphere]\n19280 200\n[plate]\n2330 inf\n"));
  CHECK_THROWS(parse_stacks("19280 inf\n"));
}
