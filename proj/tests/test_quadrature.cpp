#include <cmath>
#include <numbers>
#include <vector>

#include "casimir/quadrature.hpp"
#include "doctest.h"

using namespace casimir;

TEST_CASE("polynomials are integrated exactly by a single panel") {
  auto r = quad::integrate([](double x) { return 3 * x * x - 2 * x + 1; }, 0.0, 2.0);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(8.0 - 4.0 + 2.0).epsilon(1e-14));
}

TEST_CASE("peaked integrand converges to the requested tolerance") {
  // Int_0^1 1/(x^2 + a^2) = atan(1/a)/a
  const double a = 1e-3;
  quad::Options o;
  o.rel_tol = 1e-11;
  auto r = quad::integrate([a](double x) { return 1.0 / (x * x + a * a); }, 0.0, 1.0, o);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(std::atan(1.0 / a) / a).epsilon(1e-10));
}

TEST_CASE("integrable endpoint singularity") {
  quad::Options o;
  o.rel_tol = 1e-10;
  auto r = quad::integrate([](double x) { return std::log(x); }, 0.0, 1.0, o);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("breakpoints partition the range") {
  const std::vector<double> br = {0.0, 0.5, 0.5, 1.0, 3.0};
  auto r = quad::integrate([](double x) { return std::exp(-x); }, std::span<const double>(br));
  CHECK(r.value == doctest::Approx(1.0 - std::exp(-3.0)).epsilon(1e-13));
}

TEST_CASE("non-convergence is reported, not hidden") {
  quad::Options o;
  o.rel_tol = 1e-15;
  o.abs_tol = 0.0;
  o.max_intervals = 3;
  auto r = quad::integrate([](double x) { return std::sin(1.0 / x); }, 1e-6, 1.0, o);
  CHECK_FALSE(r.converged);
  CHECK(r.error > 0.0);
}

TEST_CASE("compensated sum keeps small addends") {
  quad::CompensatedSum s;
  s.add(1.0);
  for (int i = 0; i < 1000; ++i) s.add(1e-17);
  s.add(-1.0);
  CHECK(s.value() == doctest::Approx(1e-14).epsilon(1e-6));
}
