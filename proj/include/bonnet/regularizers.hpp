#pragma once

#include "bonnet/core.hpp"
#include "bonnet/fractional_laplacian.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bonnet {

enum class RegKind { none, tv, fractional };

std::string to_string(RegKind kind);
RegKind parse_reg_kind(const std::string& name);  // "none" | "tv" | "frac" | "fractional"

/// Components of the regularization parameter vector mu.
enum class Param { lambda, s };

std::string to_string(Param p);

/// Lower bound on lambda and margin of s inside (0, 1).
inline constexpr double kLambdaMin = 1e-15;
inline constexpr double kExponentMargin = 1e-15;

/// mu = lambda (tv, none) or (lambda, s) (fractional).
struct RegParams {
  double lambda = 1e-5;
  std::optional<double> s;

  double get(Param p) const;
  void set(Param p, double value);

  friend bool operator==(const RegParams&, const RegParams&) = default;
};

/// Clamps lambda to [kLambdaMin, inf) and s to [kExponentMargin, 1 - kExponentMargin].
RegParams project_admissible(RegParams mu);
bool is_admissible(const RegParams& mu);

/// A regularizer evaluated at a fixed mu. Vector arguments are row-major pixel
/// vectors on the regularizer's grid; all pairings are Euclidean so that
/// gradient() is the exact gradient of penalty().
class BoundRegularizer {
 public:
  virtual ~BoundRegularizer() = default;

  virtual double penalty(const Vector& u) const = 0;
  virtual void gradient(const Vector& u, Vector& out) const = 0;
  /// Linearization of gradient() at u applied to v (or its documented approximation).
  virtual void gradient_jvp(const Vector& u, const Vector& v, Vector& out) const = 0;
  /// Upper bound on the spectral norm of gradient_jvp(u, .) over all u.
  virtual double curvature_bound() const = 0;
  virtual void gradient_dmu(const Vector& u, Param p, Vector& out) const = 0;

  /// gradient_dmu for several parameters at once; overridden where they share work.
  virtual void gradient_dmu(const Vector& u, std::span<const Param> params, std::vector<Vector>& out) const;
};

/// Generalized regularizer R = 1/2 ||sigma(T(mu, u))||^2.
class Regularizer {
 public:
  virtual ~Regularizer() = default;

  virtual RegKind kind() const = 0;
  virtual const Grid& grid() const = 0;
  /// Parameters the regularizer depends on.
  virtual std::vector<Param> params() const = 0;
  /// Throws DomainError if mu is not admissible for this regularizer.
  virtual std::unique_ptr<BoundRegularizer> bind(const RegParams& mu) const = 0;
};

std::unique_ptr<Regularizer> make_no_regularizer(const Grid& grid);

/// lambda * sum_sites h^2 sqrt(|grad_h u|^2 + xi^2). grad_h is the forward
/// difference on the zero-padded image, evaluated on all (n+1)^2 sites, so the
/// site weights integrate to the unit square and -div_h = grad_h^T exactly.
std::unique_ptr<Regularizer> make_tv_regularizer(const Grid& grid, double xi = 1e-5);

/// 1/2 lambda <A^s u, u>.
std::unique_ptr<Regularizer> make_fractional_regularizer(std::shared_ptr<const SpectralLaplacian> laplacian);

std::unique_ptr<Regularizer> make_regularizer(RegKind kind, const Grid& grid, double xi = 1e-5);

// Image-level entry points.
double penalty_value(const Regularizer& reg, const RegParams& mu, const Image& u);
Image grad_term(const Regularizer& reg, const RegParams& mu, const Image& u);
Image grad_term_jvp(const Regularizer& reg, const RegParams& mu, const Image& u, const Image& v);
/// One image per entry of reg.params(): none -> {}, tv -> {d/dlambda},
/// fractional -> {d/dlambda, d/ds}.
std::vector<Image> grad_term_dmu(const Regularizer& reg, const RegParams& mu, const Image& u);

}  // namespace bonnet
