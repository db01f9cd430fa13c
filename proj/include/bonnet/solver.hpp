#pragma once

#include "bonnet/core.hpp"
#include "bonnet/radon.hpp"
#include "bonnet/regularizers.hpp"

#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bonnet {

enum class InitialGuess { zero, backprojection };

struct SolverConfig {
  double tol = 1e-5;  // on ||u - P(u - grad J(u))||_2
  int max_iters = 2000;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  double alpha_init = 1.0;
  // Trial steps alpha/m are capped at max_step / L with L = ||K^T K|| plus the
  // regularizer's curvature bound; 0 disables the cap.
  double max_step = 1.9;
  int max_backtracks = 50;
  InitialGuess init = InitialGuess::zero;
};

/// Layer caps and tolerances for the two network phases.
SolverConfig training_solver_config();  // tol 1e-3, 300 layers
SolverConfig testing_solver_config();   // tol 1e-5, 2000 layers

void validate(const SolverConfig& config);

enum class ExitReason { converged, max_iters, replayed };

std::string to_string(ExitReason reason);

struct SolveTrace {
  std::vector<double> objective;  // J(u_0), J(u_1), ...
  std::vector<double> alphas;     // accepted line-search parameter per layer
  double final_residual = 0.0;
  int layers = 0;
  int backtracks = 0;
  ExitReason reason = ExitReason::max_iters;
};

/// The line search exhausted its backtracks; carries the trace up to the failing layer.
class StepFailure : public std::runtime_error {
 public:
  StepFailure(const std::string& what, SolveTrace trace) : std::runtime_error(what), trace_(std::move(trace)) {}
  const SolveTrace& trace() const { return trace_; }

 private:
  SolveTrace trace_;
};

/// max(0, u) elementwise.
Image project_nonneg(const Image& u);

/// 1/2 ||Ku - f||^2 + penalty(u).
double inner_objective(const RadonOperator& K, const Sinogram& f, const Regularizer& reg, const RegParams& mu,
                       const Image& u);

/// One forward-propagation layer: P(u - (alpha/m) [K^T(Ku - f) + grad_term(u)]).
Image gradient_step(const RadonOperator& K, const Sinogram& f, const Regularizer& reg, const RegParams& mu,
                    const Image& u, double alpha, int m = 1);

/// Receives each layer before the iterate is overwritten: the previous
/// iterate, the pre-projection point z = u_prev - step * grad, and the step
/// actually taken (alpha / m).
class LayerObserver {
 public:
  virtual ~LayerObserver() = default;
  virtual void on_layer(const Vector& u_prev, const Vector& z, double step) = 0;
};

/// Projected gradient layers with Armijo backtracking.
///
/// Layer j tries alpha = 2 * alpha_{j-1} (alpha_init at j = 0), capped as
/// described in SolverConfig::max_step, and shrinks by
/// backtrack_factor until J(u(alpha)) <= J(u) - (c m / alpha) ||u - u(alpha)||^2.
/// Stops when the projected-gradient residual drops to config.tol or after
/// config.max_iters layers. A non-empty `schedule` replays the given alphas
/// instead: exactly schedule.size() layers, no line search, no stopping test.
std::pair<Vector, SolveTrace> run_layers(const RadonOperator& K, const Sinogram& f, const BoundRegularizer& reg,
                                         const SolverConfig& config, Vector u0, int m,
                                         std::span<const double> schedule = {}, LayerObserver* observer = nullptr);

/// Initial iterate selected by config.init.
Image initial_guess(const RadonOperator& K, const Sinogram& f, const SolverConfig& config);

/// Standalone inner solve (m = 1 unless given). Requires u0 >= 0.
std::pair<Image, SolveTrace> solve_inner(const RadonOperator& K, const Sinogram& f, const Regularizer& reg,
                                         const RegParams& mu, const SolverConfig& config, const Image& u0,
                                         int m = 1);

}  // namespace bonnet
