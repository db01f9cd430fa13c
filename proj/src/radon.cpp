#include "bonnet/radon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace bonnet {

namespace {

struct Segment {
  int pixel;
  double length;
};

// Siddon traversal of the line {o + t d} through the pixel grid.
void trace_line(const Grid& grid, double cos_t, double sin_t, double tau, std::vector<double>& ts,
                std::vector<Segment>& out) {
  out.clear();
  ts.clear();
  const int n = grid.n();
  const double h = grid.h();
  const double w = 0.5 * n * h;
  const double ox = tau * cos_t;
  const double oy = tau * sin_t;
  const double dx = -sin_t;
  const double dy = cos_t;
  constexpr double parallel = 1e-12;
  constexpr double inf = std::numeric_limits<double>::infinity();
  // Index i in [1, n-1] of the interior grid line at distance d from the image edge, else 0.
  auto on_grid_line = [&](double d) {
    const double i = std::round(d / h);
    return i >= 1 && i <= n - 1 && std::abs(d - i * h) < 1e-9 * h ? static_cast<int>(i) : 0;
  };

  double t_in = -inf;
  double t_out = inf;
  auto clip = [&](double o, double d) {
    if (std::abs(d) < parallel) {
      if (std::abs(o) >= w) t_out = -inf;
      return;
    }
    const double t1 = (-w - o) / d;
    const double t2 = (w - o) / d;
    t_in = std::max(t_in, std::min(t1, t2));
    t_out = std::min(t_out, std::max(t1, t2));
  };
  clip(ox, dx);
  clip(oy, dy);
  if (!(t_out > t_in)) return;

  ts.push_back(t_in);
  auto crossings = [&](double o, double d) {
    if (std::abs(d) < parallel) return;
    for (int i = 1; i < n; ++i) {
      const double t = (-w + i * h - o) / d;
      if (t > t_in && t < t_out) ts.push_back(t);
    }
  };
  crossings(ox, dx);
  crossings(oy, dy);
  ts.push_back(t_out);
  std::sort(ts.begin(), ts.end());

  // Coincident crossings (corner hits) would otherwise leave sliver segments.
  const double merge = 1e-12 * h;
  double prev = ts.front();
  for (std::size_t k = 1; k < ts.size(); ++k) {
    const double t = ts[k];
    if (t - prev <= merge) continue;
    const double tm = 0.5 * (prev + t);
    const double px = ox + tm * dx;
    const double py = oy + tm * dy;
    const int col = std::clamp(static_cast<int>(std::floor((px + w) / h)), 0, n - 1);
    const int row = std::clamp(static_cast<int>(std::floor((w - py) / h)), 0, n - 1);
    // A line running along an interior grid line is shared by the pixels on both sides.
    const int edge_col = std::abs(dx) < parallel ? on_grid_line(px + w) : 0;
    const int edge_row = std::abs(dy) < parallel ? on_grid_line(w - py) : 0;
    if (edge_col > 0) {
      out.push_back({static_cast<int>(grid.index(row, edge_col - 1)), 0.5 * (t - prev)});
      out.push_back({static_cast<int>(grid.index(row, edge_col)), 0.5 * (t - prev)});
    } else if (edge_row > 0) {
      out.push_back({static_cast<int>(grid.index(edge_row - 1, col)), 0.5 * (t - prev)});
      out.push_back({static_cast<int>(grid.index(edge_row, col)), 0.5 * (t - prev)});
    } else {
      out.push_back({static_cast<int>(grid.index(row, col)), t - prev});
    }
    prev = t;
  }
}

}  // namespace

int RadonOperator::default_n_tau(int n) {
  return static_cast<int>(std::ceil(std::numbers::sqrt2 * n));
}

RadonOperator RadonOperator::assemble(const Grid& grid, int n_theta, int n_tau) {
  if (n_theta < 1) throw DomainError("assemble: n_theta must be >= 1");
  if (n_tau < 1) throw DomainError("assemble: n_tau must be >= 1");

  RadonOperator op(grid);
  op.n_theta_ = n_theta;
  op.n_tau_ = n_tau;
  const double w = 0.5 * grid.n() * grid.h();
  const double half_diag = std::numbers::sqrt2 * w;
  op.spacing_ = 2.0 * half_diag / n_tau;
  for (int k = 0; k < n_theta; ++k) op.angles_deg_.push_back(180.0 * k / n_theta);
  for (int j = 0; j < n_tau; ++j) op.offsets_.push_back(-half_diag + (j + 0.5) * op.spacing_);

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(n_theta) * n_tau * 2 * grid.n());
  std::vector<double> ts;
  std::vector<Segment> segments;
  for (int k = 0; k < n_theta; ++k) {
    const double theta = std::numbers::pi * k / n_theta;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    for (int j = 0; j < n_tau; ++j) {
      trace_line(grid, c, s, op.offsets_[static_cast<std::size_t>(j)], ts, segments);
      const int row = k * n_tau + j;
      for (const auto& seg : segments) entries.emplace_back(row, seg.pixel, seg.length);
    }
  }
  op.k_.resize(static_cast<Eigen::Index>(n_theta) * n_tau, static_cast<Eigen::Index>(grid.size()));
  op.k_.setFromTriplets(entries.begin(), entries.end());
  op.k_.makeCompressed();
  op.kt_ = op.k_.transpose();
  op.kt_.makeCompressed();

  // K^T K is entrywise non-negative, so the positive start vector is never
  // orthogonal to the Perron eigenvector.
  Vector v = Vector::Ones(static_cast<Eigen::Index>(grid.size())), kv, ktkv;
  v.normalize();
  for (int it = 0; it < 500; ++it) {
    op.apply(v, kv);
    op.apply_adjoint(kv, ktkv);
    const double est = ktkv.norm();
    const bool done = est == 0.0 || std::abs(est - op.normal_norm_) <= 1e-10 * est;
    op.normal_norm_ = est;
    if (done) break;
    v = ktkv / est;
  }
  return op;
}

Sinogram RadonOperator::apply(const Image& u) const {
  if (!(u.grid == grid_)) throw DimensionError("radon apply: image grid does not match operator grid");
  Sinogram f(n_theta_, n_tau_);
  apply(u.values, f.values);
  return f;
}

Image RadonOperator::apply_adjoint(const Sinogram& f) const {
  if (f.n_theta != n_theta_ || f.n_tau != n_tau_)
    throw DimensionError("radon adjoint: sinogram shape does not match operator");
  Image u(grid_);
  apply_adjoint(f.values, u.values);
  return u;
}

void RadonOperator::apply(const Vector& u, Vector& out) const {
  if (u.size() != k_.cols()) throw DimensionError("radon apply: length mismatch");
  out.noalias() = k_ * u;
}

void RadonOperator::apply_adjoint(const Vector& f, Vector& out) const {
  if (f.size() != k_.rows()) throw DimensionError("radon adjoint: length mismatch");
  out.noalias() = kt_ * f;
}

}  // namespace bonnet
