#include "bonnet/network.hpp"

#include "bonnet/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>

namespace bonnet {

namespace {

class SensitivityRecursion final : public LayerObserver {
 public:
  SensitivityRecursion(const RadonOperator& K, const BoundRegularizer& reg, std::span<const Param> params)
      : k_(K), reg_(reg), params_(params.begin(), params.end()) {
    columns.assign(params_.size(), Vector::Zero(static_cast<Eigen::Index>(K.grid().size())));
  }

  void on_layer(const Vector& u_prev, const Vector& z, double step) override {
    if (params_.empty()) return;
    reg_.gradient_dmu(u_prev, params_, dmu_);
    for (std::size_t k = 0; k < columns.size(); ++k) {
      Vector& v = columns[k];
      k_.apply(v, kv_);
      k_.apply_adjoint(kv_, ktkv_);
      reg_.gradient_jvp(u_prev, v, jvp_);
      v -= step * (ktkv_ + jvp_ + dmu_[k]);
      v = (z.array() >= 0.0).select(v, 0.0);
    }
  }

  std::vector<Vector> columns;

 private:
  const RadonOperator& k_;
  const BoundRegularizer& reg_;
  std::vector<Param> params_;
  std::vector<Vector> dmu_;
  Vector kv_, ktkv_, jvp_;
};

void require_consistent(std::span<const Image> truth, std::span<const Image> recon) {
  if (truth.size() != recon.size())
    throw DimensionError("outer objective: " + std::to_string(truth.size()) + " truths vs " +
                         std::to_string(recon.size()) + " reconstructions");
  if (truth.empty()) throw DimensionError("outer objective: no samples");
  for (std::size_t i = 0; i < truth.size(); ++i) require_same_grid(truth[i], recon[i], "outer objective");
}

// Outer iteration coordinates: x = (ln lambda | lambda, s) restricted to the learned params.
struct OuterCoordinates {
  std::vector<Param> params;
  OuterScale scale;

  std::vector<double> to_x(const RegParams& mu) const {
    std::vector<double> x;
    for (Param p : params)
      x.push_back(p == Param::lambda && scale == OuterScale::log_lambda ? std::log(mu.lambda) : mu.get(p));
    return x;
  }

  // Writes x back into mu, projecting onto the admissible set.
  RegParams from_x(RegParams mu, const std::vector<double>& x) const {
    for (std::size_t k = 0; k < params.size(); ++k)
      mu.set(params[k], params[k] == Param::lambda && scale == OuterScale::log_lambda ? std::exp(x[k]) : x[k]);
    return project_admissible(mu);
  }

  // Chain rule from d phi / d mu to d phi / d x.
  std::vector<double> gradient_x(const RegParams& mu, const std::vector<double>& grad_mu) const {
    std::vector<double> g = grad_mu;
    for (std::size_t k = 0; k < params.size(); ++k)
      if (params[k] == Param::lambda && scale == OuterScale::log_lambda) g[k] *= mu.lambda;
    return g;
  }
};

double relative_change(const RegParams& a, const RegParams& b, std::span<const Param> params) {
  double worst = 0.0;
  for (Param p : params) worst = std::max(worst, std::abs(b.get(p) - a.get(p)) / std::abs(a.get(p)));
  return worst;
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(d);
}

}  // namespace

ForwardResult forward_with_sensitivity(const RadonOperator& K, const Sinogram& f, const Regularizer& reg,
                                       const RegParams& mu, const SolverConfig& config, int m,
                                       std::span<const Param> params, std::span<const double> schedule) {
  if (m < 1) throw DomainError("forward_with_sensitivity: m must be >= 1");
  const auto all = reg.params();
  if (params.empty()) params = all;
  const auto bound = reg.bind(mu);
  SensitivityRecursion recursion(K, *bound, params);
  const Image u0 = initial_guess(K, f, config);
  auto [u, trace] = run_layers(K, f, *bound, config, u0.values, m, schedule, &recursion);

  ForwardResult out{Image(K.grid(), std::move(u)), {}, std::move(trace)};
  out.sensitivity.params.assign(params.begin(), params.end());
  for (auto& col : recursion.columns) out.sensitivity.columns.emplace_back(K.grid(), std::move(col));
  return out;
}

double outer_objective(std::span<const Image> truth, std::span<const Image> recon) {
  require_consistent(truth, recon);
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double h = truth[i].grid.h();
    sum += h * h * (recon[i].values - truth[i].values).squaredNorm();
  }
  return sum / (2.0 * static_cast<double>(truth.size()));
}

std::vector<double> outer_gradient(std::span<const Image> truth, std::span<const Image> recon,
                                   std::span<const Sensitivity> sensitivities) {
  require_consistent(truth, recon);
  if (sensitivities.size() != truth.size())
    throw DimensionError("outer gradient: one sensitivity per sample required");
  const std::size_t dim = sensitivities.front().columns.size();
  std::vector<double> grad(dim, 0.0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (sensitivities[i].columns.size() != dim) throw DimensionError("outer gradient: inconsistent sensitivity sizes");
    const Image residual(truth[i].grid, recon[i].values - truth[i].values);
    for (std::size_t k = 0; k < dim; ++k) grad[k] += l2_inner(residual, sensitivities[i].columns[k]);
  }
  for (double& g : grad) g /= static_cast<double>(truth.size());
  return grad;
}

void validate(const TrainConfig& c) {
  if (!(c.tol > 0.0)) throw DomainError("outer tol must be positive");
  if (c.q_max < 0) throw DomainError("q_max must be non-negative");
  if (!(c.armijo_c > 0.0 && c.armijo_c < 0.5)) throw DomainError("outer armijo_c must lie in (0, 0.5)");
  if (!(c.backtrack_factor > 0.0 && c.backtrack_factor < 1.0))
    throw DomainError("outer backtrack_factor must lie in (0, 1)");
  if (c.max_backtracks < 1) throw DomainError("outer max_backtracks must be >= 1");
  if (!(c.initial_step > 0.0)) throw DomainError("outer initial_step must be positive");
  if (!(c.step_tol >= 0.0)) throw DomainError("outer step_tol must be non-negative");
  validate(c.inner);
}

std::string to_string(TrainStatus status) {
  switch (status) {
    case TrainStatus::converged: return "converged";
    case TrainStatus::small_step: return "small_step";
    case TrainStatus::max_iterations: return "max_iterations";
    case TrainStatus::line_search_failed: return "line_search_failed";
    case TrainStatus::no_parameters: return "no_parameters";
  }
  return "?";
}

BatchEvaluation evaluate_batch(std::span<const Image> truth, std::span<const Sinogram> data, const RadonOperator& K,
                               const Regularizer& reg, const RegParams& mu, const SolverConfig& inner,
                               std::span<const Param> params, int threads) {
  if (truth.size() != data.size()) throw DimensionError("evaluate_batch: truth/data count mismatch");
  const int m = static_cast<int>(truth.size());
  std::vector<std::optional<ForwardResult>> results(truth.size());
  parallel_for(
      truth.size(),
      [&](std::size_t i) { results[i] = forward_with_sensitivity(K, data[i], reg, mu, inner, m, params); }, threads);

  BatchEvaluation eval;
  std::vector<Image> recon;
  std::vector<Sensitivity> sens;
  for (auto& r : results) {
    recon.push_back(r->u);
    sens.push_back(r->sensitivity);
    eval.samples.push_back(std::move(*r));
  }
  eval.phi = outer_objective(truth, recon);
  eval.gradient = params.empty() ? std::vector<double>{} : outer_gradient(truth, recon, sens);
  return eval;
}

TrainResult train(std::span<const Image> truth, std::span<const Sinogram> data, const RadonOperator& K,
                  const Regularizer& reg, const TrainConfig& config) {
  validate(config);
  if (truth.empty()) throw DimensionError("train: needs at least one sample");
  if (truth.size() != data.size()) throw DimensionError("train: truth/data count mismatch");
  const auto start = std::chrono::steady_clock::now();

  OuterCoordinates coords{config.learn.empty() ? reg.params() : config.learn, config.scale};
  const auto available = reg.params();
  for (Param p : coords.params)
    if (std::find(available.begin(), available.end(), p) == available.end())
      throw DomainError("train: regularizer " + to_string(reg.kind()) + " has no parameter " + to_string(p));

  TrainResult result;
  result.learned = coords.params;
  RegParams mu = config.mu0;
  if (reg.kind() != RegKind::none && !is_admissible(mu)) throw DomainError("train: mu0 is not admissible");

  auto record = [&](const RegParams& at, const BatchEvaluation& eval, double pg, double beta, int backtracks) {
    OuterIterate it;
    it.mu = at;
    it.phi = eval.phi;
    it.gradient = eval.gradient;
    it.projected_gradient = pg;
    it.beta = beta;
    it.backtracks = backtracks;
    for (const auto& s : eval.samples) it.layers.push_back(s.trace.layers);
    result.iterates.push_back(std::move(it));
    result.phi_history.push_back(eval.phi);
  };

  BatchEvaluation current = evaluate_batch(truth, data, K, reg, mu, config.inner, coords.params, config.threads);

  auto projected_gradient = [&](const RegParams& at, const std::vector<double>& grad_mu) {
    const auto x = coords.to_x(at);
    const auto g = coords.gradient_x(at, grad_mu);
    std::vector<double> trial(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) trial[k] = x[k] - g[k];
    return distance(x, coords.to_x(coords.from_x(at, trial)));
  };

  double pg = coords.params.empty() ? 0.0 : projected_gradient(mu, current.gradient);
  const double pg0 = pg;
  record(mu, current, pg, 0.0, 0);

  if (coords.params.empty()) {
    result.status = TrainStatus::no_parameters;
  } else {
    result.status = TrainStatus::max_iterations;
    double beta = 0.0;
    for (int l = 0; l < config.q_max; ++l) {
      if (pg <= config.tol * pg0 || pg == 0.0) {
        result.status = TrainStatus::converged;
        break;
      }
      const auto x = coords.to_x(mu);
      const auto g = coords.gradient_x(mu, current.gradient);
      double gnorm = 0.0;
      for (double v : g) gnorm += v * v;
      gnorm = std::sqrt(gnorm);
      beta = (l == 0) ? config.initial_step / gnorm : 2.0 * beta;

      bool accepted = false, small = false;
      int backtracks = 0;
      for (; backtracks < config.max_backtracks; ++backtracks) {
        std::vector<double> trial(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) trial[k] = x[k] - beta * g[k];
        const RegParams mu_trial = coords.from_x(mu, trial);
        const double step2 = std::pow(distance(x, coords.to_x(mu_trial)), 2);
        if (step2 == 0.0) break;  // projection pins mu; no progress possible
        BatchEvaluation eval;
        try {
          eval = evaluate_batch(truth, data, K, reg, mu_trial, config.inner, coords.params, config.threads);
        } catch (const StepFailure&) {
          beta *= config.backtrack_factor;
          continue;
        }
        if (eval.phi <= current.phi - (config.armijo_c / beta) * step2) {
          small = config.step_tol > 0.0 && relative_change(mu, mu_trial, coords.params) <= config.step_tol;
          mu = mu_trial;
          current = std::move(eval);
          accepted = true;
          break;
        }
        beta *= config.backtrack_factor;
      }
      if (!accepted) {
        result.status = TrainStatus::line_search_failed;
        break;
      }
      ++result.outer_iterations;
      pg = projected_gradient(mu, current.gradient);
      record(mu, current, pg, beta, backtracks);
      if (small) {
        result.status = TrainStatus::small_step;
        break;
      }
    }
    if (result.status == TrainStatus::max_iterations && (pg <= config.tol * pg0 || pg == 0.0))
      result.status = TrainStatus::converged;
  }

  result.mu_star = mu;
  for (auto& s : current.samples) result.reconstructions.push_back(std::move(s.u));
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

Image reconstruct(const RegParams& mu_star, const Sinogram& f, const RadonOperator& K, const Regularizer& reg,
                  const SolverConfig& config) {
  const Image u0 = initial_guess(K, f, config);
  return solve_inner(K, f, reg, mu_star, config, u0, 1).first;
}

}  // namespace bonnet
