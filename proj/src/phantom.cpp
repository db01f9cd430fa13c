#include "bonnet/phantom.hpp"

#include "bonnet/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bonnet {

namespace {

constexpr double deg = std::numbers::pi / 180.0;

}  // namespace

std::vector<EllipseSpec> shepp_logan_ellipses() {
  // x0, y0, a, b, angle, intensity
  return {
      {0.0, 0.0, 0.69, 0.92, 0.0, 1.0},
      {0.0, -0.0184, 0.6624, 0.874, 0.0, -0.8},
      {0.22, 0.0, 0.11, 0.31, -18.0 * deg, -0.2},
      {-0.22, 0.0, 0.16, 0.41, 18.0 * deg, -0.2},
      {0.0, 0.35, 0.21, 0.25, 0.0, 0.1},
      {0.0, 0.1, 0.046, 0.046, 0.0, 0.1},
      {0.0, -0.1, 0.046, 0.046, 0.0, 0.1},
      {-0.08, -0.605, 0.046, 0.023, 0.0, 0.1},
      {0.0, -0.606, 0.023, 0.023, 0.0, 0.1},
      {0.06, -0.605, 0.023, 0.046, 0.0, 0.1},
  };
}

// Integer numerators keep the coordinates exactly antisymmetric about the center.
double phantom_x(const Grid& grid, int col) {
  return static_cast<double>(2 * col + 1 - grid.n()) / grid.n();
}

double phantom_y(const Grid& grid, int row) {
  return static_cast<double>(grid.n() - 2 * row - 1) / grid.n();
}

bool ellipse_contains(const EllipseSpec& e, double x, double y) {
  const double c = std::cos(e.angle);
  const double s = std::sin(e.angle);
  const double dx = x - e.x0;
  const double dy = y - e.y0;
  const double xr = dx * c + dy * s;
  const double yr = -dx * s + dy * c;
  return (xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0;
}

double ellipse_sum(std::span<const EllipseSpec> ellipses, double x, double y) {
  double v = 0.0;
  for (const auto& e : ellipses)
    if (ellipse_contains(e, x, y)) v += e.intensity;
  return v;
}

Image rasterize(const Grid& grid, std::span<const EllipseSpec> ellipses) {
  Image img(grid);
  for (int r = 0; r < grid.n(); ++r)
    for (int c = 0; c < grid.n(); ++c)
      img(r, c) = std::clamp(ellipse_sum(ellipses, phantom_x(grid, c), phantom_y(grid, r)), 0.0, 1.0);
  return img;
}

Image shepp_logan(const Grid& grid) { return rasterize(grid, shepp_logan_ellipses()); }

SampleSet generate_ensemble(const Grid& grid, int count, std::uint64_t seed, const EnsembleOptions& opts) {
  if (count < 1) throw DomainError("ensemble needs count >= 1");
  SampleSet set;
  set.seed = seed;
  set.m_train = count;
  set.images.reserve(static_cast<std::size_t>(count));
  const auto base = shepp_logan_ellipses();
  const double k = opts.perturbation_scale;
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    auto ellipses = base;
    for (auto& e : ellipses) {
      e.x0 += k * rng.uniform(-opts.center_jitter, opts.center_jitter);
      e.y0 += k * rng.uniform(-opts.center_jitter, opts.center_jitter);
      e.a *= 1.0 + k * rng.uniform(-opts.axis_jitter, opts.axis_jitter);
      e.b *= 1.0 + k * rng.uniform(-opts.axis_jitter, opts.axis_jitter);
      e.intensity *= 1.0 + k * rng.uniform(-opts.intensity_jitter, opts.intensity_jitter);
    }
    set.images.push_back(rasterize(grid, ellipses));
  }
  return set;
}

void split(SampleSet& set, int m_train) {
  const int total = static_cast<int>(set.images.size());
  if (m_train < 0 || m_train > total)
    throw DomainError("split: m_train = " + std::to_string(m_train) + " outside [0, " + std::to_string(total) + "]");
  set.m_train = m_train;
  set.m_test = total - m_train;
}

Sinogram add_noise(const Sinogram& f, double level, std::uint64_t seed) {
  if (level < 0.0) throw DomainError("noise level must be non-negative");
  Sinogram out = f;
  if (level == 0.0 || f.values.size() == 0) return out;
  const double rms = f.values.norm() / std::sqrt(static_cast<double>(f.values.size()));
  const double sigma = level * rms;
  Rng rng(seed);
  for (Eigen::Index i = 0; i < out.values.size(); ++i) out.values[i] += sigma * rng.normal();
  return out;
}

}  // namespace bonnet
