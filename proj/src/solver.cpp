#include "bonnet/solver.hpp"

#include <algorithm>
#include <limits>

namespace bonnet {

namespace {

void check_shapes(const RadonOperator& K, const Sinogram& f) {
  if (f.n_theta != K.n_theta() || f.n_tau != K.n_tau())
    throw DimensionError("sinogram shape does not match the Radon operator");
}

Vector clamp_nonneg(const Vector& z) { return z.cwiseMax(0.0); }

// Per-sample objective and gradient, with Ku cached between them.
class InnerProblem {
 public:
  InnerProblem(const RadonOperator& K, const Sinogram& f, const BoundRegularizer& reg)
      : k_(K), f_(f.values), reg_(reg) {}

  double objective(const Vector& u, Vector& ku) const {
    k_.apply(u, ku);
    return 0.5 * (ku - f_).squaredNorm() + reg_.penalty(u);
  }

  void gradient(const Vector& u, const Vector& ku, Vector& g) const {
    k_.apply_adjoint(ku - f_, g);
    reg_.gradient(u, reg_grad_);
    g += reg_grad_;
  }

 private:
  const RadonOperator& k_;
  const Vector& f_;
  const BoundRegularizer& reg_;
  mutable Vector reg_grad_;
};

}  // namespace

SolverConfig training_solver_config() {
  SolverConfig c;
  c.tol = 1e-3;
  c.max_iters = 300;
  return c;
}

SolverConfig testing_solver_config() {
  SolverConfig c;
  c.tol = 1e-5;
  c.max_iters = 2000;
  return c;
}

void validate(const SolverConfig& c) {
  if (!(c.tol > 0.0)) throw DomainError("solver tol must be positive");
  if (c.max_iters < 0) throw DomainError("solver max_iters must be non-negative");
  if (!(c.armijo_c > 0.0 && c.armijo_c < 0.5)) throw DomainError("armijo_c must lie in (0, 0.5)");
  if (!(c.backtrack_factor > 0.0 && c.backtrack_factor < 1.0))
    throw DomainError("backtrack_factor must lie in (0, 1)");
  if (!(c.alpha_init > 0.0)) throw DomainError("alpha_init must be positive");
  if (!(c.max_step >= 0.0)) throw DomainError("max_step must be non-negative");
  if (c.max_backtracks < 1) throw DomainError("max_backtracks must be >= 1");
}

std::string to_string(ExitReason reason) {
  switch (reason) {
    case ExitReason::converged: return "converged";
    case ExitReason::max_iters: return "max_iters";
    case ExitReason::replayed: return "replayed";
  }
  return "?";
}

Image project_nonneg(const Image& u) { return Image(u.grid, clamp_nonneg(u.values)); }

double inner_objective(const RadonOperator& K, const Sinogram& f, const Regularizer& reg, const RegParams& mu,
                       const Image& u) {
  check_shapes(K, f);
  if (!(u.grid == K.grid())) throw DimensionError("inner_objective: image grid mismatch");
  const auto bound = reg.bind(mu);
  Vector ku;
  return InnerProblem(K, f, *bound).objective(u.values, ku);
}

Image gradient_step(const RadonOperator& K, const Sinogram& f, const Regularizer& reg, const RegParams& mu,
                    const Image& u, double alpha, int m) {
  check_shapes(K, f);
  if (!(u.grid == K.grid())) throw DimensionError("gradient_step: image grid mismatch");
  if (alpha < 0.0) throw DomainError("gradient_step: alpha must be non-negative");
  if (m < 1) throw DomainError("gradient_step: m must be >= 1");
  const auto bound = reg.bind(mu);
  InnerProblem problem(K, f, *bound);
  Vector ku, g;
  problem.objective(u.values, ku);
  problem.gradient(u.values, ku, g);
  return Image(u.grid, clamp_nonneg(u.values - (alpha / m) * g));
}

std::pair<Vector, SolveTrace> run_layers(const RadonOperator& K, const Sinogram& f, const BoundRegularizer& reg,
                                         const SolverConfig& config, Vector u0, int m,
                                         std::span<const double> schedule, LayerObserver* observer) {
  validate(config);
  check_shapes(K, f);
  if (m < 1) throw DomainError("run_layers: m must be >= 1");
  if (static_cast<std::size_t>(u0.size()) != K.grid().size()) throw DimensionError("run_layers: u0 length mismatch");

  const InnerProblem problem(K, f, reg);
  const bool replay = !schedule.empty();
  SolveTrace trace;

  Vector u = std::move(u0);
  Vector ku, g, z, u_new, ku_new;
  double J = problem.objective(u, ku);
  problem.gradient(u, ku, g);
  trace.objective.push_back(J);

  auto residual = [&] { return (u - clamp_nonneg(u - g)).norm(); };

  const double alpha_cap = config.max_step > 0.0
                               ? config.max_step * m / (K.normal_norm() + reg.curvature_bound())
                               : std::numeric_limits<double>::infinity();
  double alpha = std::min(config.alpha_init, alpha_cap);
  for (int j = 0;; ++j) {
    if (replay) {
      if (static_cast<std::size_t>(j) == schedule.size()) {
        trace.reason = ExitReason::replayed;
        break;
      }
    } else {
      if (residual() <= config.tol) {
        trace.reason = ExitReason::converged;
        break;
      }
      if (j == config.max_iters) {
        trace.reason = ExitReason::max_iters;
        break;
      }
    }

    double J_new = 0.0;
    if (replay) {
      alpha = schedule[static_cast<std::size_t>(j)];
      z = u - (alpha / m) * g;
      u_new = clamp_nonneg(z);
      J_new = problem.objective(u_new, ku_new);
    } else {
      if (j > 0) alpha = std::min(2.0 * alpha, alpha_cap);
      for (int b = 0;; ++b) {
        const double step = alpha / m;
        z = u - step * g;
        u_new = clamp_nonneg(z);
        J_new = problem.objective(u_new, ku_new);
        if (J_new <= J - (config.armijo_c / step) * (u - u_new).squaredNorm()) break;
        if (b + 1 >= config.max_backtracks) {
          trace.final_residual = residual();
          throw StepFailure("line search failed at layer " + std::to_string(j + 1) + " after " +
                                std::to_string(config.max_backtracks) + " backtracks",
                            trace);
        }
        alpha *= config.backtrack_factor;
        ++trace.backtracks;
      }
    }

    if (observer) observer->on_layer(u, z, alpha / m);
    u.swap(u_new);
    ku.swap(ku_new);
    J = J_new;
    problem.gradient(u, ku, g);
    trace.objective.push_back(J);
    trace.alphas.push_back(alpha);
    ++trace.layers;
  }
  trace.final_residual = residual();
  return {std::move(u), std::move(trace)};
}

Image initial_guess(const RadonOperator& K, const Sinogram& f, const SolverConfig& config) {
  check_shapes(K, f);
  if (config.init == InitialGuess::zero) return Image(K.grid());
  return project_nonneg(K.apply_adjoint(f));
}

std::pair<Image, SolveTrace> solve_inner(const RadonOperator& K, const Sinogram& f, const Regularizer& reg,
                                         const RegParams& mu, const SolverConfig& config, const Image& u0, int m) {
  if (!(u0.grid == K.grid())) throw DimensionError("solve_inner: u0 grid mismatch");
  if ((u0.values.array() < 0.0).any()) throw DomainError("solve_inner: u0 must be non-negative");
  const auto bound = reg.bind(mu);
  auto [u, trace] = run_layers(K, f, *bound, config, u0.values, m);
  return {Image(u0.grid, std::move(u)), std::move(trace)};
}

}  // namespace bonnet
