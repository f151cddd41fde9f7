#include "casimir/corrections.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "casimir/constants.hpp"
#include "casimir/quadrature.hpp"

namespace casimir {

void SphereGeometry::validate() const {
  if (!(radius > 0.0)) throw std::invalid_argument("sphere: radius must be > 0");
  if (!(radius_error >= 0.0)) throw std::invalid_argument("sphere: radius_error must be >= 0");
}

double pft_pressure(double force_gradient, const SphereGeometry& sphere) {
  sphere.validate();
  return -force_gradient / (2.0 * constants::kPi * sphere.radius);
}

SurfaceHeights::SurfaceHeights() : bins_{{0.0, 1.0}} {}

SurfaceHeights::SurfaceHeights(std::vector<HeightBin> bins, std::string label)
    : bins_(std::move(bins)), label_(std::move(label)) {
  if (bins_.empty()) throw std::invalid_argument("height histogram '" + label_ + "' is empty");
  quad::CompensatedSum w, m;
  double scale = 0.0;
  for (const auto& b : bins_) {
    if (!std::isfinite(b.height)) throw std::invalid_argument("height histogram: non-finite height");
    if (!(b.weight >= 0.0)) throw std::invalid_argument("height histogram: negative weight");
    w.add(b.weight);
    m.add(b.weight * b.height);
    scale = std::max(scale, std::abs(b.height));
  }
  if (std::abs(w.value() - 1.0) > 1e-9) {
    throw std::invalid_argument("height histogram '" + label_ + "': weights sum to " +
                                std::to_string(w.value()) + ", expected 1");
  }
  if (std::abs(m.value()) > 1e-9 * std::max(scale, 1e-12)) {
    throw std::invalid_argument("height histogram '" + label_ +
                                "': heights are not measured from the mean plane");
  }
  max_abs_ = scale;
  min_ = std::min_element(bins_.begin(), bins_.end(), [](const auto& a, const auto& b) {
           return a.height < b.height;
         })->height;
}

double SurfaceHeights::rms() const {
  double s = 0.0;
  for (const auto& b : bins_) s += b.weight * b.height * b.height;
  return std::sqrt(s);
}

SurfaceHeights normalized_heights(std::vector<HeightBin> bins, std::string label) {
  double w = 0.0;
  for (const auto& b : bins) {
    if (!(b.weight >= 0.0)) throw std::invalid_argument("height histogram: negative weight");
    w += b.weight;
  }
  if (!(w > 0.0)) throw std::invalid_argument("height histogram: weights sum to zero");
  double mean = 0.0;
  for (auto& b : bins) {
    b.weight /= w;
    mean += b.weight * b.height;
  }
  for (auto& b : bins) b.height -= mean;
  // Recompute so the stored weights sum to 1 to the last bit we can manage.
  quad::CompensatedSum s;
  for (const auto& b : bins) s.add(b.weight);
  for (auto& b : bins) b.weight /= s.value();
  return SurfaceHeights(std::move(bins), std::move(label));
}

SurfaceHeights gaussian_heights(double sigma, double peak, int n_bins, std::string label) {
  if (!(sigma > 0.0) || !(peak > 0.0) || n_bins < 1) {
    throw std::invalid_argument("gaussian_heights: sigma, peak and n_bins must be positive");
  }
  std::vector<HeightBin> bins;
  const double width = 2.0 * peak / n_bins;
  auto cdf = [sigma](double x) { return 0.5 * std::erfc(-x / (sigma * std::sqrt(2.0))); };
  for (int i = 0; i < n_bins; ++i) {
    const double lo = -peak + i * width;
    const double hi = lo + width;
    // Outermost bins sit at the peak so the stated maximum height is attained.
    double h = 0.5 * (lo + hi);
    if (i == 0) h = -peak;
    if (i == n_bins - 1) h = peak;
    bins.push_back({h, cdf(hi) - cdf(lo)});
  }
  if (n_bins == 1) bins.front().height = 0.0;
  return normalized_heights(std::move(bins), std::move(label));
}

SurfaceHeights parse_height_histogram(std::string_view text, std::string label) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<HeightBin> bins;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = line.substr(0, line.find('#'));
    std::istringstream f(line);
    double h = 0.0, w = 0.0;
    if (!(f >> h)) {
      if (line.find_first_not_of(" \t\r,") == std::string::npos) continue;
      throw std::invalid_argument("height histogram: malformed line " + std::to_string(line_no));
    }
    std::string rest;
    if (!(f >> w) || (f >> rest)) {
      throw std::invalid_argument("height histogram: malformed line " + std::to_string(line_no));
    }
    bins.push_back({h * 1e-9, w});
  }
  if (bins.empty()) throw std::invalid_argument("height histogram: no rows");
  return normalized_heights(std::move(bins), std::move(label));
}

SurfaceHeights load_height_histogram(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open roughness file '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  try {
    return parse_height_histogram(s.str(), path);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

double roughness_corrected_pressure(const std::function<double(double)>& pressure,
                                    const RoughnessProfile& profiles, double z) {
  const auto& a = profiles.sphere.bins();
  const auto& b = profiles.plate.bins();
  quad::CompensatedSum total;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double w = a[i].weight * b[j].weight;
      const double local = z + a[i].height + b[j].height;
      if (!(local > 0.0)) {
        std::ostringstream msg;
        msg << "roughness: surfaces in contact at z=" << z << " m (sphere bin " << i
            << ", height " << a[i].height << " m; plate bin " << j << ", height " << b[j].height
            << " m)";
        throw ContactError(msg.str(), i, j);
      }
      if (w == 0.0) continue;
      total.add(w * pressure(local));
    }
  }
  return total.value();
}

}  // namespace casimir
