#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bonnet {

using Vector = Eigen::VectorXd;

/// Raised when operands live on different grids or have mismatched lengths.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a parameter falls outside its admissible range.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Uniform n x n pixel grid on the unit square. Pixel width h = 1/(n+1), the
/// spacing of the interior nodes of the Dirichlet Laplacian.
class Grid {
 public:
  explicit Grid(int n);

  int n() const { return n_; }
  double h() const { return 1.0 / (n_ + 1); }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }

  /// Flat row-major index of pixel (row, col).
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * n_ + col;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int n_;
};

/// Pixel samples of u on a Grid, row-major.
struct Image {
  Grid grid;
  Vector values;

  explicit Image(Grid g);
  Image(Grid g, Vector v);

  static Image zeros(Grid g) { return Image(g); }
  static Image constant(Grid g, double c);

  double& operator()(int row, int col) { return values[grid.index(row, col)]; }
  double operator()(int row, int col) const { return values[grid.index(row, col)]; }
};

/// Projection data f, angle-major: values[angle * n_tau + beamlet].
struct Sinogram {
  int n_theta;
  int n_tau;
  Vector values;

  Sinogram(int n_theta, int n_tau);
  Sinogram(int n_theta, int n_tau, Vector v);

  double& operator()(int angle, int beamlet) { return values[static_cast<Eigen::Index>(angle) * n_tau + beamlet]; }
  double operator()(int angle, int beamlet) const { return values[static_cast<Eigen::Index>(angle) * n_tau + beamlet]; }
};

void require_same_grid(const Image& a, const Image& b, const char* what);
bool all_finite(const Vector& v);

/// Uniform-quadrature approximation of the L2(Omega) pairing: h^2 * sum(a_k b_k).
double l2_inner(const Image& a, const Image& b);
double l2_norm(const Image& a);

/// Plain Euclidean pairing, used where both sides share the same scaling.
double dot(const Image& a, const Image& b);

}  // namespace bonnet
