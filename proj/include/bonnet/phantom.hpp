#pragma once

#include "bonnet/core.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace bonnet {

/// One additive ellipse in phantom coordinates [-1, 1]^2 (y up).
struct EllipseSpec {
  double x0 = 0.0;
  double y0 = 0.0;
  double a = 1.0;  // semi-axis along the rotated x direction
  double b = 1.0;
  double angle = 0.0;  // radians, counter-clockwise
  double intensity = 0.0;
};

/// Ten-ellipse Shepp-Logan table with the modified (high-contrast) intensities,
/// so rasterized values lie in [0, 1].
std::vector<EllipseSpec> shepp_logan_ellipses();

/// Horizontal-coordinate center of pixel column `col` in phantom coordinates.
double phantom_x(const Grid& grid, int col);
/// Vertical-coordinate center of pixel row `row` (row 0 is the top).
double phantom_y(const Grid& grid, int row);

bool ellipse_contains(const EllipseSpec& e, double x, double y);

/// Sum of the intensities of every ellipse containing (x, y), unclamped.
double ellipse_sum(std::span<const EllipseSpec> ellipses, double x, double y);

/// Pixel-center rasterization, clamped to [0, 1].
Image rasterize(const Grid& grid, std::span<const EllipseSpec> ellipses);

Image shepp_logan(const Grid& grid);

/// Ground-truth samples plus their train/test split. The first m_train images
/// are the training set, the remaining m_test the testing set.
struct SampleSet {
  std::vector<Image> images;
  std::uint64_t seed = 0;
  int m_train = 0;
  int m_test = 0;

  std::span<const Image> train() const { return {images.data(), static_cast<std::size_t>(m_train)}; }
  std::span<const Image> test() const {
    return {images.data() + m_train, static_cast<std::size_t>(m_test)};
  }
};

struct EnsembleOptions {
  /// Multiplies every perturbation amplitude; 0 reproduces the base phantom.
  double perturbation_scale = 1.0;
  double center_jitter = 0.05;    // absolute, phantom coordinates
  double axis_jitter = 0.10;      // relative
  double intensity_jitter = 0.10; // relative
};

/// Shepp-Logan variations. Sample k draws from Rng(derive_seed(seed, k)), one
/// uniform per perturbed quantity in ellipse order: dx, dy, da, db, dI.
/// All samples go to the training split; use split() to carve out a test set.
SampleSet generate_ensemble(const Grid& grid, int count, std::uint64_t seed, const EnsembleOptions& opts = {});

/// Re-partitions an ensemble; m_train must lie in [0, images.size()].
void split(SampleSet& set, int m_train);

/// f + eta with eta_i ~ N(0, (level * rms(f))^2), rms(f) = ||f||_2 / sqrt(len f).
Sinogram add_noise(const Sinogram& f, double level, std::uint64_t seed);

}  // namespace bonnet
