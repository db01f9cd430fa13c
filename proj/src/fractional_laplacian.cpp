#include "bonnet/fractional_laplacian.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

namespace bonnet {

namespace {

// FFTW's planner is not reentrant; executing an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct SpectralLaplacian::Plan {
  fftw_plan plan = nullptr;
  double scale = 1.0;

  explicit Plan(int n) {
    std::lock_guard lock(planner_mutex());
    Vector in(static_cast<Eigen::Index>(n) * n);
    Vector out(in.size());
    plan = fftw_plan_r2r_2d(n, n, in.data(), out.data(), FFTW_RODFT00, FFTW_RODFT00,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw std::runtime_error("fftw: failed to create DST-I plan");
    scale = 1.0 / (2.0 * (n + 1));
  }
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
};

void apply_laplacian_stencil(const Grid& grid, const Vector& u, Vector& out) {
  const int n = grid.n();
  if (static_cast<std::size_t>(u.size()) != grid.size()) throw DimensionError("stencil: length mismatch");
  const double inv_h2 = 1.0 / (grid.h() * grid.h());
  out.resize(u.size());
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const auto k = static_cast<Eigen::Index>(grid.index(r, c));
      double v = 4.0 * u[k];
      if (r > 0) v -= u[k - n];
      if (r + 1 < n) v -= u[k + n];
      if (c > 0) v -= u[k - 1];
      if (c + 1 < n) v -= u[k + 1];
      out[k] = v * inv_h2;
    }
  }
}

Image apply_laplacian_stencil(const Image& u) {
  Image out(u.grid);
  apply_laplacian_stencil(u.grid, u.values, out.values);
  return out;
}

SpectralLaplacian SpectralLaplacian::build(const Grid& grid) {
  SpectralLaplacian lap(grid);
  const int n = grid.n();
  const double h = grid.h();
  Vector s2(n);
  for (int p = 0; p < n; ++p) {
    const double s = std::sin((p + 1) * std::numbers::pi / (2.0 * (n + 1)));
    s2[p] = s * s;
  }
  lap.zeta_.resize(static_cast<Eigen::Index>(grid.size()));
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      lap.zeta_[static_cast<Eigen::Index>(grid.index(p, q))] = 4.0 / (h * h) * (s2[p] + s2[q]);
  lap.plan_ = std::make_shared<const Plan>(n);
  return lap;
}

Vector SpectralLaplacian::transform(const Vector& u) const {
  if (static_cast<std::size_t>(u.size()) != grid_.size()) throw DimensionError("sine transform: length mismatch");
  Vector in = u;
  Vector out(u.size());
  fftw_execute_r2r(plan_->plan, in.data(), out.data());
  out *= plan_->scale;
  return out;
}

Image SpectralLaplacian::eigenvector(int p, int q) const {
  const int n = grid_.n();
  Image v(grid_);
  const double norm = 2.0 / (n + 1);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      v(r, c) = norm * std::sin(std::numbers::pi * (r + 1) * (p + 1) / (n + 1)) *
                std::sin(std::numbers::pi * (c + 1) * (q + 1) / (n + 1));
  return v;
}

PowerWeights SpectralLaplacian::weights(double s, bool with_derivative) const {
  const bool ok = with_derivative ? (s > 0.0 && s < 1.0) : (s > 0.0 && s <= 1.0);
  if (!ok)
    throw DomainError("fractional exponent s = " + std::to_string(s) + " outside " +
                      (with_derivative ? "(0, 1)" : "(0, 1]"));
  PowerWeights w;
  w.s = s;
  w.power.resize(zeta_.size());
  for (Eigen::Index k = 0; k < zeta_.size(); ++k) w.power[k] = std::pow(zeta_[k], s);
  if (with_derivative) w.derivative = w.power.cwiseProduct(zeta_.array().log().matrix());
  return w;
}

void SpectralLaplacian::apply_weights(const Vector& coeffs, const Vector& weights, Vector& out) const {
  out = transform(coeffs.cwiseProduct(weights));
}

double SpectralLaplacian::energy(const Vector& coeffs, const PowerWeights& w) {
  return (coeffs.array().square() * w.power.array()).sum();
}

Image SpectralLaplacian::apply_power(double s, const Image& u) const {
  if (!(u.grid == grid_)) throw DimensionError("apply_power: grid mismatch");
  const auto w = weights(s, false);
  Image out(grid_);
  apply_weights(transform(u.values), w.power, out.values);
  return out;
}

Image SpectralLaplacian::apply_power_derivative(double s, const Image& u) const {
  if (!(u.grid == grid_)) throw DimensionError("apply_power_derivative: grid mismatch");
  const auto w = weights(s, true);
  Image out(grid_);
  apply_weights(transform(u.values), w.derivative, out.values);
  return out;
}

}  // namespace bonnet
