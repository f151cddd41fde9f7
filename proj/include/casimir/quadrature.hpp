#pragma once

// Globally adaptive Gauss-Kronrod (10/21 point) quadrature on finite
// intervals, plus compensated summation. Header-only so the integrands in
// the hot loops can be inlined.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <vector>

namespace casimir::quad {

struct Options {
  double abs_tol = 1e-12;
  double rel_tol = 1e-9;
  int max_intervals = 4000;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
  bool converged = false;
};

// Neumaier-compensated running sum. Summation order is the call order, so
// results are reproducible for a fixed order of add() calls.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

namespace detail {

inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};

inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525959700, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};

// Gauss weights for the odd-indexed Kronrod nodes.
inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk21(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  std::array<double, 21> fv{};
  const double fc = f(center);
  double resk = fc * kWgk[10];
  double resg = 0.0;
  double resabs = std::abs(resk);
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    fv[2 * j] = f1;
    fv[2 * j + 1] = f2;
    resk += kWgk[j] * (f1 + f2);
    resabs += kWgk[j] * (std::abs(f1) + std::abs(f2));
    if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
  }
  const double mean = resk * 0.5;
  double resasc = kWgk[10] * std::abs(fc - mean);
  for (int j = 0; j < 10; ++j) {
    resasc += kWgk[j] * (std::abs(fv[2 * j] - mean) + std::abs(fv[2 * j + 1] - mean));
  }
  resk *= half;
  resabs *= std::abs(half);
  resasc *= std::abs(half);
  double err = std::abs((resk - resg * half));
  if (resasc != 0.0 && err != 0.0) {
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  }
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) {
    err = std::max(50.0 * eps * resabs, err);
  }
  return Panel{a, b, resk, err};
}

}  // namespace detail

// Integrates f over [breaks.front(), breaks.back()], starting from the given
// panel boundaries and bisecting the panel with the largest error estimate
// until the total error meets max(abs_tol, rel_tol*|I|).
template <class F>
Result integrate(F&& f, std::span<const double> breaks, const Options& opt = {}) {
  Result out;
  if (breaks.size() < 2) return out;
  std::priority_queue<detail::Panel> heap;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (breaks[i + 1] == breaks[i]) continue;
    heap.push(detail::gk21(f, breaks[i], breaks[i + 1]));
    out.evaluations += 21;
  }
  auto totals = [&heap]() {
    // Summed in heap order; callers only need a deterministic result.
    std::vector<detail::Panel> panels;
    auto copy = heap;
    while (!copy.empty()) {
      panels.push_back(copy.top());
      copy.pop();
    }
    std::sort(panels.begin(), panels.end(),
              [](const detail::Panel& x, const detail::Panel& y) { return x.a < y.a; });
    CompensatedSum v, e;
    for (const auto& p : panels) {
      v.add(p.value);
      e.add(p.error);
    }
    return std::pair{v.value(), e.value()};
  };

  double value = 0.0, error = 0.0;
  {
    auto [v, e] = totals();
    value = v;
    error = e;
  }
  int panels = static_cast<int>(heap.size());
  while (error > std::max(opt.abs_tol, opt.rel_tol * std::abs(value))) {
    if (panels >= opt.max_intervals || heap.empty()) {
      out.value = value;
      out.error = error;
      out.converged = false;
      return out;
    }
    const detail::Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Interval exhausted at machine precision.
      heap.push(worst);
      out.value = value;
      out.error = error;
      out.converged = false;
      return out;
    }
    const auto left = detail::gk21(f, worst.a, mid);
    const auto right = detail::gk21(f, mid, worst.b);
    out.evaluations += 42;
    value += (left.value + right.value) - worst.value;
    error += (left.error + right.error) - worst.error;
    heap.push(left);
    heap.push(right);
    ++panels;
  }
  // Re-sum in interval order so the value does not depend on the update
  // history of the running totals.
  auto [v, e] = totals();
  out.value = v;
  out.error = e;
  out.converged = true;
  return out;
}

template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
  const std::array<double, 2> breaks{a, b};
  return integrate(std::forward<F>(f), std::span<const double>(breaks), opt);
}

}  // namespace casimir::quad
