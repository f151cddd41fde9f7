#include "casimir/metrology.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "casimir/quadrature.hpp"

namespace casimir {

namespace {

void check_confidence(double c) {
  if (c != 0.95 && c != 0.99) {
    throw std::invalid_argument("confidence must be 0.95 or 0.99, got " + std::to_string(c));
  }
}

double t_quantile(double p, double dof) {
  return boost::math::quantile(boost::math::students_t(dof), p);
}

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

long long bin_index(double z, double w) { return static_cast<long long>(std::floor(z / w)); }

struct LineFit {
  double mean = 0.0;
  double variance = std::numeric_limits<double>::quiet_NaN();
  int dof = 0;
  double slope = 0.0;
  double z_mean = 0.0;
};

// Mean, and variance about a straight line in z when the points allow one.
LineFit fit_bin(const std::vector<MeasurementPoint>& p) {
  LineFit f;
  const int n = static_cast<int>(p.size());
  quad::CompensatedSum sz, sv;
  for (const auto& x : p) {
    sz.add(x.z);
    sv.add(x.pressure);
  }
  f.z_mean = sz.value() / n;
  f.mean = sv.value() / n;
  if (n < 2) return f;
  double szz = 0.0, szv = 0.0;
  for (const auto& x : p) {
    szz += (x.z - f.z_mean) * (x.z - f.z_mean);
    szv += (x.z - f.z_mean) * (x.pressure - f.mean);
  }
  const bool line = n >= 3 && szz > 0.0;
  if (line) f.slope = szv / szz;
  double ss = 0.0;
  for (const auto& x : p) {
    const double r = x.pressure - f.mean - f.slope * (x.z - f.z_mean);
    ss += r * r;
  }
  f.dof = line ? n - 2 : n - 1;
  f.variance = ss / f.dof;
  return f;
}

}  // namespace

void MeasurementEnsemble::validate() const {
  if (!(bin_width > 0.0)) throw std::invalid_argument("ensemble: bin_width must be > 0");
  if (sets.empty()) throw std::invalid_argument("ensemble: no measurement sets");
  for (std::size_t s = 0; s < sets.size(); ++s) {
    if (sets[s].empty()) {
      throw std::invalid_argument("ensemble: set " + std::to_string(s) + " is empty");
    }
    for (const auto& p : sets[s]) {
      if (!std::isfinite(p.z) || !std::isfinite(p.pressure)) {
        throw std::invalid_argument("ensemble: non-finite value in set " + std::to_string(s));
      }
      if (p.z < z_min || p.z > z_max) {
        throw std::invalid_argument("ensemble: set " + std::to_string(s) + " has z=" +
                                    std::to_string(p.z) + " outside the declared range");
      }
    }
  }
}

std::size_t MeasurementEnsemble::point_count() const {
  std::size_t n = 0;
  for (const auto& s : sets) n += s.size();
  return n;
}

MeasurementEnsemble MeasurementEnsemble::without_sets(const std::vector<std::size_t>& drop) const {
  MeasurementEnsemble out = *this;
  out.sets.clear();
  for (std::size_t s = 0; s < sets.size(); ++s) {
    if (std::find(drop.begin(), drop.end(), s) == drop.end()) out.sets.push_back(sets[s]);
  }
  return out;
}

BinnedStats bin_points(std::vector<MeasurementPoint> points, double bin_width) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("binning: bin_width must be > 0");
  // Sorting makes the statistics independent of input order.
  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
    return a.z < b.z || (a.z == b.z && a.pressure < b.pressure);
  });
  BinnedStats out;
  out.bin_width = bin_width;
  out.point_count = points.size();
  std::size_t i = 0;
  std::vector<MeasurementPoint> cur;
  while (i < points.size()) {
    const long long idx = bin_index(points[i].z, bin_width);
    cur.clear();
    while (i < points.size() && bin_index(points[i].z, bin_width) == idx) cur.push_back(points[i++]);
    const auto f = fit_bin(cur);
    out.bins.push_back(
        {idx, f.z_mean, f.mean, f.variance, static_cast<int>(cur.size()), f.dof});
  }
  return out;
}

BinnedStats bin_ensemble(const MeasurementEnsemble& ensemble) {
  ensemble.validate();
  std::vector<MeasurementPoint> all;
  all.reserve(ensemble.point_count());
  for (const auto& s : ensemble.sets) all.insert(all.end(), s.begin(), s.end());
  return bin_points(std::move(all), ensemble.bin_width);
}

std::vector<std::size_t> detect_outlying_set(const MeasurementEnsemble& ensemble,
                                             double significance) {
  ensemble.validate();
  if (ensemble.sets.size() < 3) {
    throw std::invalid_argument("outlier detection needs at least 3 sets, got " +
                                std::to_string(ensemble.sets.size()));
  }
  if (!(significance > 0.0 && significance < 1.0)) {
    throw std::invalid_argument("outlier detection: significance must be in (0, 1)");
  }
  const double w = ensemble.bin_width;
  struct Tagged {
    MeasurementPoint p;
    std::size_t set;
  };
  std::map<long long, std::vector<Tagged>> bins;
  for (std::size_t s = 0; s < ensemble.sets.size(); ++s) {
    for (const auto& p : ensemble.sets[s]) bins[bin_index(p.z, w)].push_back({p, s});
  }

  // Mean standardized residual of each set against the other sets' line in
  // the same bin, scaled by the pooled scatter of the bin.
  std::vector<quad::CompensatedSum> sum(ensemble.sets.size());
  std::vector<int> count(ensemble.sets.size(), 0);
  std::vector<MeasurementPoint> all, others;
  for (auto& [idx, pts] : bins) {
    (void)idx;
    std::sort(pts.begin(), pts.end(), [](const Tagged& a, const Tagged& b) {
      return a.set < b.set || (a.set == b.set && a.p.z < b.p.z);
    });
    if (pts.size() < 4) continue;
    all.clear();
    for (const auto& t : pts) all.push_back(t.p);
    const auto pooled = fit_bin(all);
    const double sd = std::sqrt(pooled.variance);
    for (const auto& t : pts) {
      others.clear();
      for (const auto& u : pts) {
        if (u.set != t.set) others.push_back(u.p);
      }
      if (others.size() < 2) continue;
      const auto ref = fit_bin(others);
      const double r = t.p.pressure - ref.mean - ref.slope * (t.p.z - ref.z_mean);
      sum[t.set].add(sd > 0.0 ? r / sd : 0.0);
      ++count[t.set];
    }
  }

  std::vector<std::size_t> active;
  std::vector<double> score(ensemble.sets.size(), 0.0);
  for (std::size_t s = 0; s < ensemble.sets.size(); ++s) {
    if (count[s] > 0) {
      active.push_back(s);
      score[s] = sum[s].value() / count[s];
    }
  }
  std::vector<std::size_t> flagged;
  while (active.size() >= 3) {
    const double n = static_cast<double>(active.size());
    double mean = 0.0;
    for (auto s : active) mean += score[s];
    mean /= n;
    double var = 0.0;
    for (auto s : active) var += (score[s] - mean) * (score[s] - mean);
    const double sd = std::sqrt(var / (n - 1.0));
    if (!(sd > 0.0)) break;
    auto worst = std::max_element(active.begin(), active.end(), [&](auto a, auto b) {
      return std::abs(score[a] - mean) < std::abs(score[b] - mean);
    });
    const double g = std::abs(score[*worst] - mean) / sd;
    const double t = t_quantile(1.0 - significance / (2.0 * n), n - 2.0);
    const double g_crit = (n - 1.0) / std::sqrt(n) * std::sqrt(t * t / (n - 2.0 + t * t));
    if (g <= g_crit) break;
    flagged.push_back(*worst);
    active.erase(worst);
  }
  std::sort(flagged.begin(), flagged.end());
  return flagged;
}

Curve::Curve(std::vector<double> z, std::vector<double> value) : z_(std::move(z)), v_(std::move(value)) {
  if (z_.empty() || z_.size() != v_.size()) {
    throw std::invalid_argument("curve: need matching, nonempty node and value lists");
  }
  for (std::size_t i = 1; i < z_.size(); ++i) {
    if (!(z_[i] > z_[i - 1])) throw std::invalid_argument("curve: z must be strictly increasing");
  }
}

double Curve::operator()(double z) const {
  if (z_.empty()) throw std::out_of_range("curve is empty");
  if (z < z_.front() || z > z_.back()) {
    std::ostringstream msg;
    msg << "curve: z=" << z << " outside [" << z_.front() << ", " << z_.back() << "]";
    throw std::out_of_range(msg.str());
  }
  auto it = std::lower_bound(z_.begin(), z_.end(), z);
  const std::size_t i = static_cast<std::size_t>(it - z_.begin());
  if (z_[i] == z || i == 0) return v_[i];
  const double t = (z - z_[i - 1]) / (z_[i] - z_[i - 1]);
  return v_[i - 1] + t * (v_[i] - v_[i - 1]);
}

Curve random_error_curve(const BinnedStats& binned, double confidence) {
  check_confidence(confidence);
  std::vector<double> z, hw;
  for (const auto& b : binned.bins) {
    if (b.degenerate()) continue;
    const double t = t_quantile(0.5 * (1.0 + confidence), b.dof);
    z.push_back(b.z_mean);
    hw.push_back(t * std::sqrt(b.variance / b.count));
  }
  if (z.empty()) throw std::invalid_argument("random error: every bin has fewer than 2 points");
  constexpr int kHalf = 5;
  std::vector<double> smooth(hw.size());
  std::vector<double> window;
  const int n = static_cast<int>(hw.size());
  for (int i = 0; i < n; ++i) {
    window.assign(hw.begin() + std::max(0, i - kHalf), hw.begin() + std::min(n, i + kHalf + 1));
    const std::size_t m = window.size() / 2;
    std::nth_element(window.begin(), window.begin() + m, window.end());
    double med = window[m];
    if (window.size() % 2 == 0) {
      med = 0.5 * (med + *std::max_element(window.begin(), window.begin() + m));
    }
    smooth[i] = med;
  }
  return Curve(std::move(z), std::move(smooth));
}

std::string_view to_string(Distribution d) {
  switch (d) {
    case Distribution::Normal: return "normal";
    case Distribution::Student: return "student";
    case Distribution::Uniform: return "uniform";
  }
  return "?";
}

Distribution parse_distribution(std::string_view tag) {
  if (tag == "normal") return Distribution::Normal;
  if (tag == "student") return Distribution::Student;
  if (tag == "uniform") return Distribution::Uniform;
  throw std::invalid_argument("unknown distribution tag '" + std::string(tag) + "'");
}

ZProfile ZProfile::power(double z_ref, double exponent) {
  if (!(z_ref > 0.0)) throw std::invalid_argument("z profile: z_ref must be > 0");
  ZProfile p;
  p.z_ref_ = z_ref;
  p.exponent_ = exponent;
  return p;
}

ZProfile ZProfile::knots(std::vector<std::pair<double, double>> z_factor) {
  if (z_factor.empty()) throw std::invalid_argument("z profile: no knots");
  for (std::size_t i = 0; i < z_factor.size(); ++i) {
    if (!(z_factor[i].second >= 0.0)) throw std::invalid_argument("z profile: negative factor");
    if (i > 0 && !(z_factor[i].first > z_factor[i - 1].first)) {
      throw std::invalid_argument("z profile: knots must be strictly increasing in z");
    }
  }
  ZProfile p;
  p.knots_ = std::move(z_factor);
  return p;
}

double ZProfile::operator()(double z) const {
  if (!knots_.empty()) {
    if (z <= knots_.front().first) return knots_.front().second;
    if (z >= knots_.back().first) return knots_.back().second;
    auto it = std::lower_bound(knots_.begin(), knots_.end(), z,
                               [](const auto& k, double v) { return k.first < v; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    return lo.second + (z - lo.first) / (hi.first - lo.first) * (hi.second - lo.second);
  }
  if (exponent_ == 0.0) return 1.0;
  if (!(z > 0.0)) throw std::invalid_argument("z profile: power law needs z > 0");
  return std::pow(z / z_ref_, exponent_);
}

void ErrorBudget::validate() const {
  for (const auto& c : components) {
    if (!(c.magnitude >= 0.0)) {
      throw std::invalid_argument("error budget: component '" + c.label + "' has negative magnitude");
    }
    switch (c.distribution) {
      case Distribution::Normal:
      case Distribution::Uniform: break;
      case Distribution::Student:
        if (c.dof < 1) {
          throw std::invalid_argument("error budget: student component '" + c.label +
                                      "' needs dof >= 1");
        }
        break;
      default:
        throw std::invalid_argument("error budget: component '" + c.label +
                                    "' has an unknown distribution");
    }
  }
}

ErrorBudget ErrorBudget::only(Scope scope) const {
  ErrorBudget out;
  for (const auto& c : components) {
    if (c.scope == scope) out.components.push_back(c);
  }
  return out;
}

double component_half_width(const ErrorComponent& c, double abs_pressure, double confidence,
                            double z) {
  check_confidence(confidence);
  double scale = c.relative ? abs_pressure : 1.0;
  if (!c.profile.is_constant()) {
    if (std::isnan(z)) {
      throw std::invalid_argument("error component '" + c.label + "' depends on z; none given");
    }
    scale *= c.profile(z);
  }
  const double p = 0.5 * (1.0 + confidence);
  switch (c.distribution) {
    case Distribution::Normal: return normal_quantile(p) * c.magnitude * scale;
    case Distribution::Student:
      if (c.dof < 1) throw std::invalid_argument("student component '" + c.label + "' needs dof");
      return t_quantile(p, c.dof) * c.magnitude * scale;
    case Distribution::Uniform: return confidence * c.magnitude * scale;
  }
  throw std::invalid_argument("error component '" + c.label + "' has an unknown distribution");
}

double combine_half_widths(std::span<const double> h) {
  double sum = 0.0, sq = 0.0;
  for (double x : h) {
    if (!(x >= 0.0)) throw std::invalid_argument("combine: negative half-width");
    sum += x;
    sq += x * x;
  }
  return std::min(sum, 1.1 * std::sqrt(sq));
}

double combine_errors(const ErrorBudget& budget, double abs_pressure, double confidence, double z) {
  check_confidence(confidence);
  budget.validate();
  std::vector<double> h;
  h.reserve(budget.components.size());
  for (const auto& c : budget.components) {
    h.push_back(component_half_width(c, abs_pressure, confidence, z));
  }
  return combine_half_widths(h);
}

ErrorBudget theory_budget(const SphereGeometry& sphere, double dz, double optical_rel) {
  sphere.validate();
  if (!(dz >= 0.0)) throw std::invalid_argument("theory budget: dz must be >= 0");
  if (!(optical_rel >= 0.0)) throw std::invalid_argument("theory budget: optical_rel must be >= 0");
  ErrorBudget b;
  b.components.push_back({"proximity force (z/R)", Distribution::Uniform, 1.0 / sphere.radius,
                          true, 0, Scope::PerEnsemble, ZProfile::power(1.0, 1.0)});
  b.components.push_back(
      {"optical data", Distribution::Uniform, optical_rel, true, 0, Scope::PerEnsemble, {}});
  b.components.push_back({"separation (4 dz/z)", Distribution::Normal, 4.0 * dz / 1.96, true, 0,
                          Scope::PerEnsemble, ZProfile::power(1.0, -1.0)});
  return b;
}

double theory_error_curve(double z, const SphereGeometry& sphere, double dz, double optical_rel,
                          double confidence) {
  if (!(z > 0.0)) throw std::invalid_argument("theory error: z must be > 0");
  return combine_errors(theory_budget(sphere, dz, optical_rel), 1.0, confidence, z);
}

void ConfidenceBand::validate() const {
  if (entries.empty()) throw std::invalid_argument("confidence band is empty");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!(entries[i].half_width > 0.0)) {
      throw std::invalid_argument("confidence band: half_width must be > 0");
    }
    if (i > 0 && !(entries[i].z > entries[i - 1].z)) {
      throw std::invalid_argument("confidence band: z must be strictly increasing");
    }
  }
}

double ConfidenceBand::half_width_at(double z) const {
  if (entries.empty()) throw std::out_of_range("confidence band is empty");
  if (z < entries.front().z || z > entries.back().z) {
    std::ostringstream msg;
    msg << "confidence band: z=" << z << " outside [" << entries.front().z << ", "
        << entries.back().z << "]";
    throw std::out_of_range(msg.str());
  }
  auto it = std::lower_bound(entries.begin(), entries.end(), z,
                             [](const BandPoint& p, double v) { return p.z < v; });
  if (it->z == z || it == entries.begin()) return it->half_width;
  const auto& lo = *(it - 1);
  const double t = (z - lo.z) / (it->z - lo.z);
  return lo.half_width + t * (it->half_width - lo.half_width);
}

ConfidenceBand ConfidenceBand::scaled(double factor) const {
  if (!(factor > 0.0)) throw std::invalid_argument("confidence band: scale must be > 0");
  ConfidenceBand out = *this;
  for (auto& e : out.entries) e.half_width *= factor;
  return out;
}

Curve experimental_error_curve(const BinnedStats& binned, const ErrorBudget& systematic,
                               double confidence) {
  const Curve random = random_error_curve(binned, confidence);
  std::vector<double> z, hw;
  std::vector<double> parts;
  for (const auto& b : binned.bins) {
    if (b.degenerate()) continue;
    parts.assign(1, random(b.z_mean));
    for (const auto& c : systematic.components) {
      parts.push_back(component_half_width(c, std::abs(b.value_mean), confidence, b.z_mean));
    }
    z.push_back(b.z_mean);
    hw.push_back(combine_half_widths(parts));
  }
  return Curve(std::move(z), std::move(hw));
}

ConfidenceBand confidence_band(const std::function<double(double)>& theory_rel,
                               const Curve& expt_abs, const PressureCurve& model_curve,
                               double confidence) {
  check_confidence(confidence);
  model_curve.validate();
  if (expt_abs.empty()) throw std::invalid_argument("confidence band: experimental error is empty");
  const double lo = std::max(expt_abs.z_min(), model_curve.z_min());
  const double hi = std::min(expt_abs.z_max(), model_curve.z_max());
  if (!(lo < hi)) {
    throw std::invalid_argument("confidence band: theory and experiment ranges do not overlap");
  }
  ConfidenceBand band;
  band.confidence = confidence;
  std::vector<double> zs = {lo};
  for (const auto& e : model_curve.entries) {
    if (e.z > lo && e.z < hi) zs.push_back(e.z);
  }
  zs.push_back(hi);
  for (double z : zs) {
    const double p = std::abs(model_curve.pressure_at(z));
    const std::array<double, 2> parts = {theory_rel(z) * p, expt_abs(z)};
    band.entries.push_back({z, combine_half_widths(parts)});
  }
  band.validate();
  return band;
}

std::vector<Difference> binned_differences(const MeasurementEnsemble& ensemble,
                                           const PressureCurve& model_curve) {
  ensemble.validate();
  std::vector<MeasurementPoint> d;
  d.reserve(ensemble.point_count());
  for (const auto& s : ensemble.sets) {
    for (const auto& p : s) d.push_back({p.z, model_curve.pressure_at(p.z) - p.pressure});
  }
  const auto binned = bin_points(std::move(d), ensemble.bin_width);
  std::vector<Difference> out;
  out.reserve(binned.bins.size());
  for (const auto& b : binned.bins) out.push_back({b.z_mean, b.value_mean});
  return out;
}

ExclusionVerdict exclusion_test(const std::vector<Difference>& differences,
                                const ConfidenceBand& band, const ExclusionOptions& opt) {
  if (differences.empty()) throw std::invalid_argument("exclusion test: no differences");
  if (!(opt.window_width > 0.0)) throw std::invalid_argument("exclusion test: window width");
  band.validate();
  std::vector<Difference> d = differences;
  std::sort(d.begin(), d.end(), [](const auto& a, const auto& b) { return a.z < b.z; });

  ExclusionVerdict v;
  v.confidence = band.confidence;
  v.points = d.size();
  std::size_t positive = 0;
  std::vector<bool> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    out[i] = std::abs(d[i].value) > band.half_width_at(d[i].z);
    if (out[i]) ++v.outside;
    if (d[i].value > 0.0) ++positive;
  }
  v.fraction_outside = static_cast<double>(v.outside) / v.points;
  v.positive_fraction = static_cast<double>(positive) / v.points;

  // Windows and the index range of their points.
  struct Span {
    std::size_t first, last;
  };
  std::vector<Span> spans;
  std::size_t i = 0;
  while (i < d.size()) {
    const long long w = bin_index(d[i].z, opt.window_width);
    WindowFlag f;
    f.z_lo = w * opt.window_width;
    f.z_hi = (w + 1) * opt.window_width;
    const std::size_t first = i;
    while (i < d.size() && bin_index(d[i].z, opt.window_width) == w) {
      ++f.points;
      if (out[i]) ++f.outside;
      ++i;
    }
    f.excluded = f.points >= opt.min_points &&
                 static_cast<double>(f.outside) / f.points > opt.threshold;
    v.windows.push_back(f);
    spans.push_back({first, i - 1});
  }
  for (std::size_t k = 0; k < v.windows.size(); ++k) {
    if (!v.windows[k].excluded) continue;
    std::size_t end = k;
    while (end + 1 < v.windows.size() && v.windows[end + 1].excluded &&
           std::abs(v.windows[end + 1].z_lo - v.windows[end].z_hi) < 1e-3 * opt.window_width) {
      ++end;
    }
    v.excluded_windows.push_back({d[spans[k].first].z, d[spans[end].last].z});
    k = end;
  }
  v.accepted = v.excluded_windows.empty();
  return v;
}

MeasurementEnsemble generate_synthetic_ensemble(const PressureCurve& model_curve,
                                                const ErrorBudget& noise,
                                                const SyntheticOptions& opt) {
  noise.validate();
  model_curve.validate();
  if (opt.n_sets < 1 || opt.points_per_set < 1) {
    throw std::invalid_argument("synthetic ensemble: n_sets and points_per_set must be >= 1");
  }
  if (!(opt.z_min > 0.0 && opt.z_max > opt.z_min)) {
    throw std::invalid_argument("synthetic ensemble: need 0 < z_min < z_max");
  }
  if (opt.z_min < model_curve.z_min() || opt.z_max > model_curve.z_max()) {
    throw std::invalid_argument("synthetic ensemble: z range exceeds the model curve");
  }

  auto draw = [](const ErrorComponent& c, std::mt19937_64& rng) {
    switch (c.distribution) {
      case Distribution::Normal: return std::normal_distribution<double>(0.0, 1.0)(rng);
      case Distribution::Student: return std::student_t_distribution<double>(c.dof)(rng);
      case Distribution::Uniform: return std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    }
    return 0.0;
  };

  std::seed_seq ens_seq{opt.seed, std::uint64_t{0x5eed}};
  std::mt19937_64 ens_rng(ens_seq);
  std::vector<std::pair<const ErrorComponent*, double>> shared;
  std::vector<const ErrorComponent*> per_point;
  for (const auto& c : noise.components) {
    if (c.scope == Scope::PerEnsemble) {
      shared.emplace_back(&c, draw(c, ens_rng));
    } else {
      per_point.push_back(&c);
    }
  }
  auto contribution = [](const ErrorComponent& c, double x, double p, double z) {
    return x * c.magnitude * c.profile(z) * (c.relative ? std::abs(p) : 1.0);
  };
  // Standard deviation of the per-point noise, the unit of planted offsets.
  auto point_sigma = [&](double p, double z) {
    double v = 0.0;
    for (const auto* c : per_point) {
      double s = c->magnitude * c->profile(z) * (c->relative ? std::abs(p) : 1.0);
      if (c->distribution == Distribution::Uniform) s /= std::sqrt(3.0);
      if (c->distribution == Distribution::Student && c->dof > 2) {
        s *= std::sqrt(c->dof / (c->dof - 2.0));
      }
      v += s * s;
    }
    return std::sqrt(v);
  };

  MeasurementEnsemble ens;
  ens.bin_width = opt.bin_width;
  ens.provenance = Provenance::Synthetic;
  ens.z_min = opt.z_min;
  ens.z_max = opt.z_max;
  ens.sets.resize(opt.n_sets);
  const double step = (opt.z_max - opt.z_min) / opt.points_per_set;
  for (int s = 0; s < opt.n_sets; ++s) {
    std::seed_seq seq{opt.seed, static_cast<std::uint64_t>(s) + 1};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double offset = 0.0;
    for (const auto& pl : opt.planted) {
      if (pl.set == static_cast<std::size_t>(s)) offset += pl.sigmas;
    }
    auto& set = ens.sets[s];
    set.reserve(opt.points_per_set);
    for (int k = 0; k < opt.points_per_set; ++k) {
      const double z = std::min(opt.z_max, opt.z_min + (k + unit(rng)) * step);
      const double p = model_curve.pressure_at(z);
      double value = p;
      for (const auto& [c, x] : shared) value += contribution(*c, x, p, z);
      for (const auto* c : per_point) value += contribution(*c, draw(*c, rng), p, z);
      if (offset != 0.0) value += offset * point_sigma(p, z);
      set.push_back({z, value});
    }
  }
  return ens;
}

MeasurementEnsemble generate_synthetic_ensemble(const ReflectionModel& model,
                                                const ErrorBudget& noise,
                                                const SyntheticOptions& opt, double temperature) {
  if (!(opt.z_min > 0.0 && opt.z_max > opt.z_min)) {
    throw std::invalid_argument("synthetic ensemble: need 0 < z_min < z_max");
  }
  std::vector<double> zs;
  const double lo = std::floor(opt.z_min * 1e9) * 1e-9;
  for (double z = lo; z < opt.z_max + 1e-9; z += 1e-9) zs.push_back(z);
  if (zs.back() < opt.z_max) zs.push_back(opt.z_max);
  return generate_synthetic_ensemble(compute_pressure_curve(model, zs, temperature), noise, opt);
}

void write_ensemble_csv(std::ostream& out, const MeasurementEnsemble& ensemble) {
  const auto prec = out.precision(17);
  out << "set_index,z_m,pressure_Pa\n";
  for (std::size_t s = 0; s < ensemble.sets.size(); ++s) {
    for (const auto& p : ensemble.sets[s]) out << s << ',' << p.z << ',' << p.pressure << '\n';
  }
  out.precision(prec);
}

MeasurementEnsemble read_ensemble_csv(std::string_view text, double bin_width) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  bool header = false;
  std::map<long long, MeasurementSet> sets;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "set_index,z_m,pressure_Pa") {
        throw std::invalid_argument("ensemble csv: expected header 'set_index,z_m,pressure_Pa' at line " +
                                    std::to_string(line_no));
      }
      header = true;
      continue;
    }
    std::istringstream f(line);
    std::string a, b, c, extra;
    if (!std::getline(f, a, ',') || !std::getline(f, b, ',') || !std::getline(f, c, ',') ||
        std::getline(f, extra, ',')) {
      throw std::invalid_argument("ensemble csv: malformed line " + std::to_string(line_no));
    }
    try {
      std::size_t ua = 0, ub = 0, uc = 0;
      const long long s = std::stoll(a, &ua);
      const double z = std::stod(b, &ub);
      const double p = std::stod(c, &uc);
      if (ua != a.size() || ub != b.size() || uc != c.size() || s < 0) throw std::invalid_argument(a);
      sets[s].push_back({z, p});
    } catch (const std::exception&) {
      throw std::invalid_argument("ensemble csv: malformed line " + std::to_string(line_no));
    }
  }
  if (!header) throw std::invalid_argument("ensemble csv: missing header");
  MeasurementEnsemble ens;
  ens.bin_width = bin_width;
  ens.provenance = Provenance::External;
  for (auto& [idx, set] : sets) {
    (void)idx;
    ens.sets.push_back(std::move(set));
  }
  ens.validate();
  return ens;
}

}  // namespace casimir
