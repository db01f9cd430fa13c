#pragma once

#include "bonnet/core.hpp"

#include <memory>

namespace bonnet {

/// Five-point -Laplacian with homogeneous Dirichlet boundary, scaled by 1/h^2.
Image apply_laplacian_stencil(const Image& u);
void apply_laplacian_stencil(const Grid& grid, const Vector& u, Vector& out);

/// Spectral weights zeta^s and zeta^s ln(zeta), precomputed for one exponent.
struct PowerWeights {
  double s = 0.0;
  Vector power;
  Vector derivative;
};

/// Spectral calculus for A, the Dirichlet five-point Laplacian on a Grid.
///
/// A = V D V^T with V the tensor-product sine basis, so A^s = V diag(zeta^s) V^T
/// and d/ds A^s = V diag(zeta^s ln zeta) V^T. V is applied with a 2-D DST-I
/// (FFTW RODFT00, estimate-mode plan for run-to-run reproducibility), scaled to
/// be orthonormal, which makes it its own inverse.
///
/// Eigenvalue k = p*n + q (0-based) is
///   zeta_pq = (4/h^2) (sin^2((p+1)pi / 2(n+1)) + sin^2((q+1)pi / 2(n+1))).
///
/// Instances are immutable after build() and safe to share across threads.
class SpectralLaplacian {
 public:
  static SpectralLaplacian build(const Grid& grid);

  const Grid& grid() const { return grid_; }
  const Vector& eigenvalues() const { return zeta_; }

  /// Orthonormal 2-D sine transform; transform(transform(u)) == u.
  Vector transform(const Vector& u) const;

  /// Eigenvector with 0-based mode indices (p, q), unit Euclidean norm.
  Image eigenvector(int p, int q) const;

  /// Throws DomainError unless 0 < s <= 1 (or 0 < s < 1 with derivative).
  PowerWeights weights(double s, bool with_derivative = true) const;

  Image apply_power(double s, const Image& u) const;
  Image apply_power_derivative(double s, const Image& u) const;

  // Vector-level forms with precomputed weights. `coeffs` is transform(u).
  void apply_weights(const Vector& coeffs, const Vector& weights, Vector& out) const;
  /// <A^s u, u> = sum_k zeta_k^s c_k^2 for coeffs c.
  static double energy(const Vector& coeffs, const PowerWeights& w);

 private:
  struct Plan;
  SpectralLaplacian(Grid grid) : grid_(grid) {}

  Grid grid_;
  Vector zeta_;
  std::shared_ptr<const Plan> plan_;
};

}  // namespace bonnet
