#pragma once

// Sphere-plate to plate-plate conversion and the geometric roughness
// average over surface height distributions.

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace casimir {

struct SphereGeometry {
  double radius = 148.7e-6;       // m
  double radius_error = 0.2e-6;   // m

  void validate() const;
};

// P = -F' / (2 pi R) for a measured force gradient F' (N/m).
double pft_pressure(double force_gradient, const SphereGeometry& sphere);

struct HeightBin {
  double height = 0.0;  // m, from the mean plane, positive away from the gap
  double weight = 0.0;
};

// Height distribution of one surface. Weights must sum to 1 and the
// weighted mean height must vanish (both to 1e-9 relative).
class SurfaceHeights {
 public:
  SurfaceHeights();  // flat surface
  explicit SurfaceHeights(std::vector<HeightBin> bins, std::string label = {});

  const std::vector<HeightBin>& bins() const { return bins_; }
  const std::string& label() const { return label_; }
  double max_abs_height() const { return max_abs_; }
  double min_height() const { return min_; }
  double rms() const;

 private:
  std::vector<HeightBin> bins_;
  std::string label_;
  double max_abs_ = 0.0;
  double min_ = 0.0;
};

struct RoughnessProfile {
  SurfaceHeights sphere;
  SurfaceHeights plate;
};

// Rescales weights to unit sum and shifts heights to zero weighted mean.
SurfaceHeights normalized_heights(std::vector<HeightBin> bins, std::string label = {});

// Gaussian histogram of standard deviation sigma, cut at +-peak, with
// n_bins equal-width bins. Symmetric, so the mean plane is exact.
SurfaceHeights gaussian_heights(double sigma, double peak, int n_bins, std::string label = {});

// "height_nm weight" rows with '#' comments; normalized on load.
SurfaceHeights parse_height_histogram(std::string_view text, std::string label = {});
SurfaceHeights load_height_histogram(const std::string& path);

class ContactError : public std::domain_error {
 public:
  ContactError(const std::string& what, std::size_t sphere_bin, std::size_t plate_bin)
      : std::domain_error(what), sphere_bin_(sphere_bin), plate_bin_(plate_bin) {}
  std::size_t sphere_bin() const { return sphere_bin_; }
  std::size_t plate_bin() const { return plate_bin_; }

 private:
  std::size_t sphere_bin_;
  std::size_t plate_bin_;
};

// Sum_ij w_i v_j P(z + h_i + g_j).
double roughness_corrected_pressure(const std::function<double(double)>& pressure,
                                    const RoughnessProfile& profiles, double z);

}  // namespace casimir
