#include "bonnet/core.hpp"

#include <cmath>

namespace bonnet {

Grid::Grid(int n) : n_(n) {
  if (n < 2) throw DomainError("grid needs at least 2 pixels per side, got " + std::to_string(n));
}

Image::Image(Grid g) : grid(g), values(Vector::Zero(static_cast<Eigen::Index>(g.size()))) {}

Image::Image(Grid g, Vector v) : grid(g), values(std::move(v)) {
  if (static_cast<std::size_t>(values.size()) != grid.size())
    throw DimensionError("image has " + std::to_string(values.size()) + " values, grid expects " +
                         std::to_string(grid.size()));
  if (!all_finite(values)) throw DomainError("image has non-finite values");
}

Image Image::constant(Grid g, double c) {
  return Image(g, Vector::Constant(static_cast<Eigen::Index>(g.size()), c));
}

Sinogram::Sinogram(int n_theta_, int n_tau_)
    : n_theta(n_theta_), n_tau(n_tau_), values(Vector::Zero(static_cast<Eigen::Index>(n_theta_) * n_tau_)) {
  if (n_theta < 1 || n_tau < 1) throw DomainError("sinogram needs n_theta >= 1 and n_tau >= 1");
}

Sinogram::Sinogram(int n_theta_, int n_tau_, Vector v) : n_theta(n_theta_), n_tau(n_tau_), values(std::move(v)) {
  if (n_theta < 1 || n_tau < 1) throw DomainError("sinogram needs n_theta >= 1 and n_tau >= 1");
  if (values.size() != static_cast<Eigen::Index>(n_theta) * n_tau)
    throw DimensionError("sinogram has " + std::to_string(values.size()) + " values, expected " +
                         std::to_string(n_theta * n_tau));
  if (!all_finite(values)) throw DomainError("sinogram has non-finite values");
}

void require_same_grid(const Image& a, const Image& b, const char* what) {
  if (!(a.grid == b.grid))
    throw DimensionError(std::string(what) + ": grid mismatch (" + std::to_string(a.grid.n()) + " vs " +
                         std::to_string(b.grid.n()) + ")");
}

bool all_finite(const Vector& v) { return v.allFinite(); }

double l2_inner(const Image& a, const Image& b) {
  require_same_grid(a, b, "l2_inner");
  const double h = a.grid.h();
  return h * h * a.values.dot(b.values);
}

double l2_norm(const Image& a) { return std::sqrt(l2_inner(a, a)); }

double dot(const Image& a, const Image& b) {
  require_same_grid(a, b, "dot");
  return a.values.dot(b.values);
}

}  // namespace bonnet
