#pragma once

#include "bonnet/core.hpp"

#include <Eigen/SparseCore>

#include <vector>

namespace bonnet {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Parallel-beam discrete Radon transform on a Grid.
///
/// The image occupies the square [-W, W]^2 with W = n*h/2, pixel (row, col)
/// centered at (-W + (col+1/2)h, W - (row+1/2)h). Angle k is 180k/n_theta
/// degrees; beamlet j sits at offset tau_j = -T + (j+1/2)(2T/n_tau) with
/// T = sqrt(2)*W, so the beamlets span the circumscribed diagonal. Beamlet
/// (theta, tau) is the line x cos(theta) + y sin(theta) = tau and entry k_ij
/// is the exact length of line i inside pixel j.
class RadonOperator {
 public:
  static RadonOperator assemble(const Grid& grid, int n_theta, int n_tau);

  /// ceil(sqrt(2) * n): roughly one beamlet per pixel width across the diagonal.
  static int default_n_tau(int n);

  const Grid& grid() const { return grid_; }
  int n_theta() const { return n_theta_; }
  int n_tau() const { return n_tau_; }
  const std::vector<double>& angles_deg() const { return angles_deg_; }
  const std::vector<double>& offsets() const { return offsets_; }
  double beamlet_spacing() const { return spacing_; }
  const SparseMatrix& matrix() const { return k_; }
  /// Largest eigenvalue of K^T K, by power iteration from the all-ones image.
  double normal_norm() const { return normal_norm_; }

  Sinogram apply(const Image& u) const;
  Image apply_adjoint(const Sinogram& f) const;

  // Vector-level kernels used by the solver's inner loops.
  void apply(const Vector& u, Vector& out) const;
  void apply_adjoint(const Vector& f, Vector& out) const;

 private:
  RadonOperator(Grid grid) : grid_(grid) {}

  Grid grid_;
  int n_theta_ = 0;
  int n_tau_ = 0;
  double spacing_ = 0.0;
  double normal_norm_ = 0.0;
  std::vector<double> angles_deg_;
  std::vector<double> offsets_;
  SparseMatrix k_;
  SparseMatrix kt_;  // cached transpose, so both products are row gathers
};

}  // namespace bonnet
