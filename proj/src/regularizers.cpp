#include "bonnet/regularizers.hpp"

#include <algorithm>
#include <cmath>

namespace bonnet {

std::string to_string(RegKind kind) {
  switch (kind) {
    case RegKind::none: return "none";
    case RegKind::tv: return "tv";
    case RegKind::fractional: return "frac";
  }
  return "?";
}

RegKind parse_reg_kind(const std::string& name) {
  if (name == "none") return RegKind::none;
  if (name == "tv") return RegKind::tv;
  if (name == "frac" || name == "fractional") return RegKind::fractional;
  throw DomainError("unknown regularizer '" + name + "' (expected none, tv or frac)");
}

std::string to_string(Param p) { return p == Param::lambda ? "lambda" : "s"; }

double RegParams::get(Param p) const {
  if (p == Param::lambda) return lambda;
  if (!s) throw DomainError("RegParams: no fractional exponent set");
  return *s;
}

void RegParams::set(Param p, double value) {
  if (p == Param::lambda)
    lambda = value;
  else
    s = value;
}

RegParams project_admissible(RegParams mu) {
  mu.lambda = std::max(mu.lambda, kLambdaMin);
  if (mu.s) mu.s = std::clamp(*mu.s, kExponentMargin, 1.0 - kExponentMargin);
  return mu;
}

bool is_admissible(const RegParams& mu) {
  if (!(mu.lambda >= kLambdaMin) || !std::isfinite(mu.lambda)) return false;
  if (mu.s && !(*mu.s >= kExponentMargin && *mu.s <= 1.0 - kExponentMargin)) return false;
  return true;
}

void BoundRegularizer::gradient_dmu(const Vector& u, std::span<const Param> params, std::vector<Vector>& out) const {
  out.resize(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) gradient_dmu(u, params[k], out[k]);
}

namespace {

void require_admissible(const RegParams& mu) {
  if (!is_admissible(mu)) throw DomainError("regularization parameters outside the admissible set");
}

// ---------------------------------------------------------------- none

class BoundNone final : public BoundRegularizer {
 public:
  using BoundRegularizer::gradient_dmu;
  double penalty(const Vector&) const override { return 0.0; }
  void gradient(const Vector& u, Vector& out) const override { out.setZero(u.size()); }
  void gradient_jvp(const Vector&, const Vector& v, Vector& out) const override { out.setZero(v.size()); }
  double curvature_bound() const override { return 0.0; }
  void gradient_dmu(const Vector& u, Param, Vector& out) const override { out.setZero(u.size()); }
};

class NoRegularizer final : public Regularizer {
 public:
  explicit NoRegularizer(Grid grid) : grid_(grid) {}
  RegKind kind() const override { return RegKind::none; }
  const Grid& grid() const override { return grid_; }
  std::vector<Param> params() const override { return {}; }
  std::unique_ptr<BoundRegularizer> bind(const RegParams&) const override { return std::make_unique<BoundNone>(); }

 private:
  Grid grid_;
};

// ---------------------------------------------------------------- tv

class BoundTv final : public BoundRegularizer {
 public:
  using BoundRegularizer::gradient_dmu;

  BoundTv(Grid grid, double xi, double lambda) : grid_(grid), xi_(xi), lambda_(lambda) {}

  double penalty(const Vector& u) const override {
    const int n = grid_.n();
    const double h = grid_.h();
    double sum = 0.0;
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) {
        const auto [gx, gy] = site_gradient(u, i, j);
        sum += std::sqrt(gx * gx + gy * gy + xi_ * xi_);
      }
    return lambda_ * h * h * sum;
  }

  void gradient(const Vector& u, Vector& out) const override {
    flux_divergence(u, out);
    out *= lambda_;
  }

  // Approximation: the linearized flux is replaced by the plain
  // discrete Laplacian, carried with the same h^2 site weight as the gradient.
  void gradient_jvp(const Vector&, const Vector& v, Vector& out) const override {
    apply_laplacian_stencil(grid_, v, out);
    const double h = grid_.h();
    out *= lambda_ * h * h;
  }

  // The stencil is bounded by 8/h^2.
  double curvature_bound() const override { return 8.0 * lambda_; }

  // The TV lambda-sensitivity keeps a 1/2 factor by convention.
  void gradient_dmu(const Vector& u, Param p, Vector& out) const override {
    if (p != Param::lambda) throw DomainError("tv regularizer has no parameter " + to_string(p));
    flux_divergence(u, out);
    out *= 0.5;
  }

 private:
  // Padded pixel value; padded index (i, j) maps to pixel (i-1, j-1).
  double padded(const Vector& u, int i, int j) const {
    const int n = grid_.n();
    if (i < 1 || j < 1 || i > n || j > n) return 0.0;
    return u[static_cast<Eigen::Index>(grid_.index(i - 1, j - 1))];
  }

  std::pair<double, double> site_gradient(const Vector& u, int i, int j) const {
    const double inv_h = 1.0 / grid_.h();
    const double c = padded(u, i, j);
    return {(padded(u, i, j + 1) - c) * inv_h, (padded(u, i + 1, j) - c) * inv_h};
  }

  // h^2 * (-div_h)(grad_h u / sqrt(|grad_h u|^2 + xi^2)).
  void flux_divergence(const Vector& u, Vector& out) const {
    const int n = grid_.n();
    const int sites = n + 1;
    const double h = grid_.h();
    qx_.resize(static_cast<std::size_t>(sites) * sites);
    qy_.resize(qx_.size());
    for (int i = 0; i < sites; ++i)
      for (int j = 0; j < sites; ++j) {
        const auto [gx, gy] = site_gradient(u, i, j);
        const double rho = std::sqrt(gx * gx + gy * gy + xi_ * xi_);
        qx_[static_cast<std::size_t>(i) * sites + j] = gx / rho;
        qy_[static_cast<std::size_t>(i) * sites + j] = gy / rho;
      }
    auto q = [sites](const std::vector<double>& v, int i, int j) { return v[static_cast<std::size_t>(i) * sites + j]; };
    out.resize(u.size());
    for (int a = 1; a <= n; ++a)
      for (int b = 1; b <= n; ++b) {
        const double d = q(qx_, a, b - 1) - q(qx_, a, b) + q(qy_, a - 1, b) - q(qy_, a, b);
        out[static_cast<Eigen::Index>(grid_.index(a - 1, b - 1))] = h * d;
      }
  }

  Grid grid_;
  double xi_;
  double lambda_;
  mutable std::vector<double> qx_, qy_;  // scratch; a bound instance is used by one thread
};

class TvRegularizer final : public Regularizer {
 public:
  TvRegularizer(Grid grid, double xi) : grid_(grid), xi_(xi) {
    if (!(xi > 0.0)) throw DomainError("tv smoothing xi must be positive");
  }
  RegKind kind() const override { return RegKind::tv; }
  const Grid& grid() const override { return grid_; }
  std::vector<Param> params() const override { return {Param::lambda}; }
  std::unique_ptr<BoundRegularizer> bind(const RegParams& mu) const override {
    require_admissible(mu);
    return std::make_unique<BoundTv>(grid_, xi_, mu.lambda);
  }

 private:
  Grid grid_;
  double xi_;
};

// ---------------------------------------------------------------- fractional

class BoundFractional final : public BoundRegularizer {
 public:
  BoundFractional(std::shared_ptr<const SpectralLaplacian> lap, double lambda, double s)
      : lap_(std::move(lap)), lambda_(lambda), w_(lap_->weights(s, true)) {}

  double penalty(const Vector& u) const override {
    return 0.5 * lambda_ * SpectralLaplacian::energy(lap_->transform(u), w_);
  }

  void gradient(const Vector& u, Vector& out) const override {
    lap_->apply_weights(lap_->transform(u), w_.power, out);
    out *= lambda_;
  }

  void gradient_jvp(const Vector&, const Vector& v, Vector& out) const override { gradient(v, out); }
  double curvature_bound() const override { return lambda_ * w_.power.maxCoeff(); }

  void gradient_dmu(const Vector& u, Param p, Vector& out) const override {
    const Vector c = lap_->transform(u);
    if (p == Param::lambda) {
      lap_->apply_weights(c, w_.power, out);
    } else {
      lap_->apply_weights(c, w_.derivative, out);
      out *= lambda_;
    }
  }

  void gradient_dmu(const Vector& u, std::span<const Param> params, std::vector<Vector>& out) const override {
    const Vector c = lap_->transform(u);
    out.resize(params.size());
    for (std::size_t k = 0; k < params.size(); ++k) {
      if (params[k] == Param::lambda) {
        lap_->apply_weights(c, w_.power, out[k]);
      } else {
        lap_->apply_weights(c, w_.derivative, out[k]);
        out[k] *= lambda_;
      }
    }
  }

 private:
  std::shared_ptr<const SpectralLaplacian> lap_;
  double lambda_;
  PowerWeights w_;
};

class FractionalRegularizer final : public Regularizer {
 public:
  explicit FractionalRegularizer(std::shared_ptr<const SpectralLaplacian> lap) : lap_(std::move(lap)) {}
  RegKind kind() const override { return RegKind::fractional; }
  const Grid& grid() const override { return lap_->grid(); }
  std::vector<Param> params() const override { return {Param::lambda, Param::s}; }
  std::unique_ptr<BoundRegularizer> bind(const RegParams& mu) const override {
    if (!mu.s) throw DomainError("fractional regularizer needs an exponent s");
    require_admissible(mu);
    return std::make_unique<BoundFractional>(lap_, mu.lambda, *mu.s);
  }

 private:
  std::shared_ptr<const SpectralLaplacian> lap_;
};

void require_grid(const Regularizer& reg, const Image& u) {
  if (!(reg.grid() == u.grid)) throw DimensionError("regularizer: image grid mismatch");
}

}  // namespace

std::unique_ptr<Regularizer> make_no_regularizer(const Grid& grid) { return std::make_unique<NoRegularizer>(grid); }

std::unique_ptr<Regularizer> make_tv_regularizer(const Grid& grid, double xi) {
  return std::make_unique<TvRegularizer>(grid, xi);
}

std::unique_ptr<Regularizer> make_fractional_regularizer(std::shared_ptr<const SpectralLaplacian> laplacian) {
  return std::make_unique<FractionalRegularizer>(std::move(laplacian));
}

std::unique_ptr<Regularizer> make_regularizer(RegKind kind, const Grid& grid, double xi) {
  switch (kind) {
    case RegKind::none: return make_no_regularizer(grid);
    case RegKind::tv: return make_tv_regularizer(grid, xi);
    case RegKind::fractional:
      return make_fractional_regularizer(std::make_shared<const SpectralLaplacian>(SpectralLaplacian::build(grid)));
  }
  throw DomainError("unknown regularizer kind");
}

double penalty_value(const Regularizer& reg, const RegParams& mu, const Image& u) {
  require_grid(reg, u);
  return reg.bind(mu)->penalty(u.values);
}

Image grad_term(const Regularizer& reg, const RegParams& mu, const Image& u) {
  require_grid(reg, u);
  Image out(u.grid);
  reg.bind(mu)->gradient(u.values, out.values);
  return out;
}

Image grad_term_jvp(const Regularizer& reg, const RegParams& mu, const Image& u, const Image& v) {
  require_grid(reg, u);
  require_grid(reg, v);
  Image out(u.grid);
  reg.bind(mu)->gradient_jvp(u.values, v.values, out.values);
  return out;
}

std::vector<Image> grad_term_dmu(const Regularizer& reg, const RegParams& mu, const Image& u) {
  require_grid(reg, u);
  const auto bound = reg.bind(mu);
  std::vector<Image> out;
  for (Param p : reg.params()) {
    Image col(u.grid);
    bound->gradient_dmu(u.values, p, col.values);
    out.push_back(std::move(col));
  }
  return out;
}

}  // namespace bonnet
