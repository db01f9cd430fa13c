#pragma once

#include "bonnet/core.hpp"
#include "bonnet/radon.hpp"
#include "bonnet/regularizers.hpp"
#include "bonnet/solver.hpp"

#include <span>
#include <string>
#include <vector>

namespace bonnet {

/// du/dmu, one image-shaped column per learned component of mu.
struct Sensitivity {
  std::vector<Param> params;
  std::vector<Image> columns;
};

struct ForwardResult {
  Image u;
  Sensitivity sensitivity;
  SolveTrace trace;
};

/// Training-phase forward pass of one sample with its sensitivity recursion.
///
/// Each layer sets u_j = P(z_j), z_j = u_{j-1} - (alpha_j/m) grad J(u_{j-1}), and
///   du_j/dmu = M_j .* [ (I - (alpha_j/m)(K^T K + R'')) du_{j-1}/dmu
///                       - (alpha_j/m) d(grad R)/dmu ],
/// where M_j = [z_j >= 0] and R'' is the regularizer's gradient_jvp. The step
/// alpha_j is treated as a constant. `params` defaults to reg.params(); a
/// non-empty `schedule` replays recorded alphas (see run_layers).
ForwardResult forward_with_sensitivity(const RadonOperator& K, const Sinogram& f, const Regularizer& reg,
                                       const RegParams& mu, const SolverConfig& config, int m,
                                       std::span<const Param> params = {}, std::span<const double> schedule = {});

/// phi = 1/(2m) sum_i ||u_i - u_true_i||^2_{L2}.
double outer_objective(std::span<const Image> truth, std::span<const Image> recon);

/// d phi / d mu_k = 1/m sum_i (u_i - u_true_i, du_i/dmu_k)_{L2}.
std::vector<double> outer_gradient(std::span<const Image> truth, std::span<const Image> recon,
                                   std::span<const Sensitivity> sensitivities);

/// Coordinates of the outer projected-gradient iteration.
enum class OuterScale {
  linear,      // steps in (lambda, s)
  log_lambda,  // steps in (ln lambda, s)
};

struct TrainConfig {
  double tol = 1e-3;  // relative to the projected-gradient norm at mu0
  int q_max = 100;
  SolverConfig inner = training_solver_config();
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  int max_backtracks = 20;
  double initial_step = 1.0;  // length of the first trial step, in outer coordinates
  /// Stop once an accepted step moves every learned component by at most this
  /// fraction of its value; 0 disables the test.
  double step_tol = 1e-3;
  OuterScale scale = OuterScale::log_lambda;
  RegParams mu0{1e-5, 0.5};
  std::vector<Param> learn;  // empty: all of reg.params()
  int threads = 0;           // 0: default_thread_count()
};

void validate(const TrainConfig& config);

enum class TrainStatus { converged, small_step, max_iterations, line_search_failed, no_parameters };

std::string to_string(TrainStatus status);

/// One accepted outer iterate.
struct OuterIterate {
  RegParams mu;
  double phi = 0.0;
  std::vector<double> gradient;  // d phi / d mu, natural coordinates
  double projected_gradient = 0.0;
  double beta = 0.0;
  int backtracks = 0;
  std::vector<int> layers;  // per sample
};

struct TrainResult {
  RegParams mu_star;
  std::vector<Param> learned;
  std::vector<double> phi_history;
  std::vector<OuterIterate> iterates;  // iterates[0] is mu0
  TrainStatus status = TrainStatus::max_iterations;
  int outer_iterations = 0;
  double wall_seconds = 0.0;
  std::vector<Image> reconstructions;  // final-layer training reconstructions at mu_star
};

/// Values of phi, its gradient and the per-sample forward passes at one mu.
struct BatchEvaluation {
  double phi = 0.0;
  std::vector<double> gradient;
  std::vector<ForwardResult> samples;
};

BatchEvaluation evaluate_batch(std::span<const Image> truth, std::span<const Sinogram> data, const RadonOperator& K,
                               const Regularizer& reg, const RegParams& mu, const SolverConfig& inner,
                               std::span<const Param> params, int threads = 0);

/// Outer loop mu_{l+1} = P_Mad(mu_l - beta grad phi(mu_l)) with Armijo
/// backtracking on phi; every trial beta re-runs all forward passes.
TrainResult train(std::span<const Image> truth, std::span<const Sinogram> data, const RadonOperator& K,
                  const Regularizer& reg, const TrainConfig& config);

/// Testing phase: inner solve from the configured initial guess with m = 1.
Image reconstruct(const RegParams& mu_star, const Sinogram& f, const RadonOperator& K, const Regularizer& reg,
                  const SolverConfig& config = testing_solver_config());

}  // namespace bonnet
