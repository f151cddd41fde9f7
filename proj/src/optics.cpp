#include "casimir/optics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "casimir/constants.hpp"
#include "casimir/quadrature.hpp"

namespace casimir {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

OpticalDataset::OpticalDataset(std::vector<OpticalPoint> points, std::string metal_name,
                               std::string source)
    : points_(std::move(points)), metal_name_(std::move(metal_name)), source_(std::move(source)) {
  if (points_.size() < 2) {
    throw std::invalid_argument("optical dataset needs at least 2 points");
  }
  for (const auto& p : points_) {
    if (!(p.omega > 0.0) || !std::isfinite(p.omega)) {
      throw std::invalid_argument("optical dataset: omega must be positive and finite");
    }
    if (!(p.n >= 0.0) || !(p.k >= 0.0)) {
      throw std::invalid_argument("optical dataset: n and k must be non-negative");
    }
  }
  std::sort(points_.begin(), points_.end(),
            [](const OpticalPoint& a, const OpticalPoint& b) { return a.omega < b.omega; });
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (points_[i].omega == points_[i - 1].omega) {
      throw std::invalid_argument("optical dataset: duplicate omega");
    }
  }
}

double OpticalDataset::imag_permittivity(double omega) const {
  if (omega < points_.front().omega || omega > points_.back().omega) return 0.0;
  auto it = std::upper_bound(points_.begin(), points_.end(), omega,
                             [](double w, const OpticalPoint& p) { return w < p.omega; });
  if (it == points_.end()) --it;
  if (it == points_.begin()) ++it;
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double ylo = 2.0 * lo.n * lo.k;
  const double yhi = 2.0 * hi.n * hi.k;
  if (ylo > 0.0 && yhi > 0.0) {
    const double t = std::log(omega / lo.omega) / std::log(hi.omega / lo.omega);
    return std::exp(std::log(ylo) + t * (std::log(yhi) - std::log(ylo)));
  }
  const double t = (omega - lo.omega) / (hi.omega - lo.omega);
  return ylo + t * (yhi - ylo);
}

std::optional<FrequencyUnit> parse_frequency_unit(std::string_view text) {
  const auto s = lower(trim(text));
  if (s == "ev") return FrequencyUnit::ElectronVolt;
  if (s == "rad/s" || s == "rad_per_s") return FrequencyUnit::RadPerSecond;
  if (s == "um" || s == "micrometers" || s == "micrometer") return FrequencyUnit::Micrometer;
  return std::nullopt;
}

std::string_view to_string(FrequencyUnit unit) {
  switch (unit) {
    case FrequencyUnit::ElectronVolt: return "eV";
    case FrequencyUnit::RadPerSecond: return "rad/s";
    case FrequencyUnit::Micrometer: return "um";
  }
  return "?";
}

double to_angular_frequency(double value, FrequencyUnit unit) {
  switch (unit) {
    case FrequencyUnit::ElectronVolt: return value * constants::kEvToRadPerSec;
    case FrequencyUnit::RadPerSecond: return value;
    case FrequencyUnit::Micrometer:
      return 2.0 * constants::kPi * constants::kSpeedOfLight / (value * 1e-6);
  }
  return value;
}

OpticalDataset load_optical_table(std::string_view raw_text, std::optional<FrequencyUnit> unit,
                                  std::string source) {
  std::optional<FrequencyUnit> header_unit;
  std::string metal;
  struct Row {
    double x, n, k;
  };
  std::vector<Row> rows;
  std::istringstream in{std::string(raw_text)};
  std::string line;
  int line_no = 0;
  int row_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      auto body = trim(std::string_view(t).substr(1));
      const auto lb = lower(body);
      if (lb.rfind("unit:", 0) == 0) {
        header_unit = parse_frequency_unit(body.substr(5));
        if (!header_unit) {
          throw ParseError("optical table: unknown unit in header line " +
                               std::to_string(line_no) + ": '" + body.substr(5) + "'",
                           0, line_no);
        }
      } else if (metal.empty() && line_no == 1) {
        metal = body;
      }
      continue;
    }
    ++row_no;
    std::string cells = t.substr(0, t.find('#'));
    std::replace(cells.begin(), cells.end(), ',', ' ');
    std::istringstream fields(cells);
    std::vector<double> values;
    std::string tok;
    while (fields >> tok) {
      try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        values.push_back(v);
      } catch (const std::exception&) {
        throw ParseError("optical table: malformed row " + std::to_string(row_no) + " (line " +
                             std::to_string(line_no) + "): bad number '" + tok + "'",
                         row_no, line_no);
      }
    }
    if (values.size() != 3) {
      throw ParseError("optical table: malformed row " + std::to_string(row_no) + " (line " +
                           std::to_string(line_no) + "): expected 3 columns, got " +
                           std::to_string(values.size()),
                       row_no, line_no);
    }
    rows.push_back({values[0], values[1], values[2]});
  }
  if (rows.empty()) throw ParseError("optical table: empty table", 0, 0);
  const auto chosen = unit ? unit : header_unit;
  if (!chosen) {
    throw ParseError("optical table: no unit given (header '#unit:' or explicit override)", 0, 0);
  }
  std::vector<OpticalPoint> pts;
  pts.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (!(r.x > 0.0)) {
      throw ParseError("optical table: malformed row " + std::to_string(i + 1) +
                           ": frequency/wavelength must be positive",
                       static_cast<int>(i + 1), 0);
    }
    pts.push_back({to_angular_frequency(r.x, *chosen), r.n, r.k});
  }
  try {
    return OpticalDataset(std::move(pts), metal, std::move(source));
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("optical table: ") + e.what(), 0, 0);
  }
}

OpticalDataset load_optical_table_file(const std::string& path, std::optional<FrequencyUnit> unit) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open optical table '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return load_optical_table(ss.str(), unit, path);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.row(), e.line());
  }
}

void write_optical_table(std::ostream& out, const OpticalDataset& data, FrequencyUnit unit) {
  out << "# " << (data.metal_name().empty() ? "metal" : data.metal_name()) << "\n";
  if (!data.source().empty()) out << "# source: " << data.source() << "\n";
  out << "#unit: " << to_string(unit) << "\n";
  out << std::setprecision(17);
  const auto& pts = data.points();
  auto emit = [&](const OpticalPoint& p) {
    double x = p.omega;
    if (unit == FrequencyUnit::ElectronVolt) x = p.omega / constants::kEvToRadPerSec;
    if (unit == FrequencyUnit::Micrometer)
      x = 2.0 * constants::kPi * constants::kSpeedOfLight / p.omega * 1e6;
    out << x << " " << p.n << " " << p.k << "\n";
  };
  for (const auto& p : pts) emit(p);
}

void DrudeParameters::validate() const {
  if (!(omega_p > 0.0)) throw std::invalid_argument("Drude parameters: omega_p must be > 0");
  if (!(gamma >= 0.0)) throw std::invalid_argument("Drude parameters: gamma must be >= 0");
}

OpticalDataset synthesize_drude_dataset(const DrudeParameters& drude, double omega_min,
                                        double omega_max, int points_per_decade,
                                        std::string metal_name) {
  drude.validate();
  if (!(omega_min > 0.0) || !(omega_max > omega_min) || points_per_decade < 1) {
    throw std::invalid_argument("synthesize_drude_dataset: bad grid");
  }
  const double decades = std::log10(omega_max / omega_min);
  const int n = std::max(2, static_cast<int>(std::ceil(decades * points_per_decade)) + 1);
  std::vector<OpticalPoint> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double w = omega_min * std::pow(omega_max / omega_min, static_cast<double>(i) / (n - 1));
    const std::complex<double> eps =
        1.0 - drude.omega_p * drude.omega_p / (w * std::complex<double>(w, drude.gamma));
    const auto nk = std::sqrt(eps);  // principal root: Re, Im >= 0
    pts.push_back({w, std::abs(nk.real()), std::abs(nk.imag())});
  }
  std::ostringstream src;
  src << "synthetic Drude omega_p=" << drude.omega_p << " gamma=" << drude.gamma;
  return OpticalDataset(std::move(pts), std::move(metal_name), src.str());
}

namespace {

// Int_0^a omega * ImEps_D(omega) / (omega^2 + xi^2) d omega for the Drude
// form ImEps_D = wp^2 gamma / (omega (omega^2 + gamma^2)).
double drude_low_segment(const DrudeParameters& d, double a, double xi) {
  const double wp2 = d.omega_p * d.omega_p;
  const double g = d.gamma;
  const double atan_g = std::atan2(a, g);
  const double atan_x = std::atan2(a, xi);
  if (std::abs(xi - g) > 1e-6 * xi) {
    return wp2 * (atan_g - (g / xi) * atan_x) / (xi * xi - g * g);
  }
  // Removable singularity at xi = gamma.
  return wp2 * (atan_g / g + a / (g * g + a * a)) / (2.0 * g);
}

}  // namespace

double permittivity_imag_axis(const OpticalDataset& data, const DrudeParameters& drude, double xi,
                              const DispersionOptions& opt) {
  if (!(xi > 0.0)) throw std::invalid_argument("permittivity_imag_axis: xi must be > 0");
  drude.validate();
  const double low = drude_low_segment(drude, data.omega_min(), xi);

  // Tabulated part integrated in u = ln(omega); integrand omega^2 ImEps/(omega^2+xi^2).
  const auto& pts = data.points();
  std::vector<double> breaks;
  breaks.reserve(pts.size() + 1);
  for (const auto& p : pts) breaks.push_back(std::log(p.omega));
  const double lx = std::log(xi);
  if (lx > breaks.front() && lx < breaks.back()) {
    breaks.insert(std::upper_bound(breaks.begin(), breaks.end(), lx), lx);
  }
  const double xi2 = xi * xi;
  auto integrand = [&](double u) {
    const double w = std::exp(u);
    const double w2 = w * w;
    return w2 * data.imag_permittivity(w) / (w2 + xi2);
  };
  quad::Options qo{opt.abs_tol, opt.rel_tol, opt.max_intervals};
  const auto res = quad::integrate(integrand, std::span<const double>(breaks), qo);
  if (!res.converged) {
    std::ostringstream msg;
    msg << "permittivity_imag_axis: quadrature did not converge at xi=" << xi
        << " (achieved error " << res.error << ")";
    throw QuadratureError(msg.str(), res.error);
  }
  const double eps = 1.0 + (2.0 / constants::kPi) * (low + res.value);
  if (!(eps >= 1.0)) {
    throw std::logic_error("permittivity_imag_axis: eps(i xi) < 1");
  }
  return eps;
}

double drude_permittivity(const DrudeParameters& drude, double xi) {
  if (!(xi > 0.0)) throw std::invalid_argument("drude_permittivity: xi must be > 0");
  return 1.0 + drude.omega_p * drude.omega_p / (xi * (xi + drude.gamma));
}

double plasma_permittivity(double omega_p, double xi) {
  if (!(xi > 0.0)) throw std::invalid_argument("plasma_permittivity: xi must be > 0");
  return 1.0 + omega_p * omega_p / (xi * xi);
}

double leontovich_impedance(double epsilon) {
  if (!(epsilon >= 1.0)) throw std::invalid_argument("leontovich_impedance: epsilon must be >= 1");
  return 1.0 / std::sqrt(epsilon);
}

PermittivityFn::PermittivityFn(std::string name, ZeroFrequencyBehavior behavior,
                               std::function<double(double)> eval)
    : name_(std::move(name)), behavior_(behavior), eval_(std::move(eval)) {}

double PermittivityFn::operator()(double xi) const {
  if (!(xi > 0.0)) throw std::invalid_argument("permittivity '" + name_ + "': xi must be > 0");
  const double eps = eval_(xi);
  if (!(eps >= 1.0)) {
    throw std::domain_error("permittivity '" + name_ + "' returned eps < 1");
  }
  return eps;
}

PermittivityFn make_drude_permittivity(const DrudeParameters& drude) {
  drude.validate();
  const auto behavior =
      drude.gamma > 0.0 ? ZeroFrequencyBehavior::DrudeLike : ZeroFrequencyBehavior::PlasmaLike;
  return PermittivityFn("drude", behavior,
                        [drude](double xi) { return drude_permittivity(drude, xi); });
}

PermittivityFn make_plasma_permittivity(double omega_p) {
  if (!(omega_p > 0.0)) throw std::invalid_argument("plasma permittivity: omega_p must be > 0");
  return PermittivityFn("plasma", ZeroFrequencyBehavior::PlasmaLike,
                        [omega_p](double xi) { return plasma_permittivity(omega_p, xi); });
}

PermittivityFn make_constant_permittivity(double epsilon) {
  if (!(epsilon >= 1.0)) throw std::invalid_argument("constant permittivity must be >= 1");
  return PermittivityFn("constant", ZeroFrequencyBehavior::Finite,
                        [epsilon](double) { return epsilon; });
}

namespace {

struct TabulatedState {
  TabulatedState(OpticalDataset d, const DrudeParameters& dr, const DispersionOptions& o)
      : data(std::move(d)), drude(dr), opt(o) {}
  OpticalDataset data;
  DrudeParameters drude;
  DispersionOptions opt;
  std::mutex mu;
  std::unordered_map<double, double> cache;
};

}  // namespace

PermittivityFn make_tabulated_permittivity(OpticalDataset data, const DrudeParameters& drude,
                                           const DispersionOptions& opt) {
  drude.validate();
  auto state = std::make_shared<TabulatedState>(std::move(data), drude, opt);
  const auto behavior =
      drude.gamma > 0.0 ? ZeroFrequencyBehavior::DrudeLike : ZeroFrequencyBehavior::PlasmaLike;
  std::string name = "tabulated";
  if (!state->data.metal_name().empty()) name += ":" + state->data.metal_name();
  return PermittivityFn(std::move(name), behavior, [state](double xi) {
    {
      std::lock_guard lock(state->mu);
      if (auto it = state->cache.find(xi); it != state->cache.end()) return it->second;
    }
    const double eps = permittivity_imag_axis(state->data, state->drude, xi, state->opt);
    std::lock_guard lock(state->mu);
    state->cache.emplace(xi, eps);
    return eps;
  });
}

}  // namespace casimir
