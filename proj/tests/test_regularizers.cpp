#include "bonnet/regularizers.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <numbers>

using namespace bonnet;

namespace {

std::shared_ptr<const SpectralLaplacian> lap(int n) {
  return std::make_shared<const SpectralLaplacian>(SpectralLaplacian::build(Grid(n)));
}

Image random_image(const Grid& g, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  return Image(g, oracle::random_vector(g.size(), seed, lo, hi));
}

Image shifted(const Image& u, const Image& v, double eps) { return Image(u.grid, u.values + eps * v.values); }

}  // namespace

TEST_CASE("parameter projection") {
  RegParams mu{-3.0, 1.5};
  const RegParams p = project_admissible(mu);
  CHECK(p.lambda == kLambdaMin);
  CHECK(*p.s == 1.0 - kExponentMargin);
  CHECK(is_admissible(p));
  CHECK(!is_admissible(mu));
  CHECK(project_admissible(RegParams{0.0, -1.0}).s == kExponentMargin);
  CHECK(project_admissible(RegParams{2e-3, 0.4}) == RegParams{2e-3, 0.4});
  CHECK(!project_admissible(RegParams{1.0, std::nullopt}).s);

  RegParams q;
  q.set(Param::s, 0.3);
  q.set(Param::lambda, 4.0);
  CHECK(q.get(Param::s) == 0.3);
  CHECK(q.get(Param::lambda) == 4.0);
  CHECK(parse_reg_kind("frac") == RegKind::fractional);
  CHECK(parse_reg_kind("tv") == RegKind::tv);
  CHECK_THROWS_AS(parse_reg_kind("l1"), DomainError);
}

TEST_CASE("binding rejects inadmissible parameters") {
  const Grid g(6);
  const auto frac = make_fractional_regularizer(lap(6));
  const auto tv = make_tv_regularizer(g);
  CHECK_THROWS_AS(frac->bind(RegParams{1.0, std::nullopt}), DomainError);
  CHECK_THROWS_AS(frac->bind(RegParams{0.0, 0.5}), DomainError);
  CHECK_THROWS_AS(frac->bind(RegParams{1.0, 1.0}), DomainError);
  CHECK_THROWS_AS(tv->bind(RegParams{-1.0, std::nullopt}), DomainError);
  CHECK_THROWS_AS(make_tv_regularizer(g, 0.0), DomainError);
  CHECK_THROWS_AS(penalty_value(*tv, RegParams{1.0, std::nullopt}, Image(Grid(7))), DimensionError);
}

TEST_CASE("zero image") {
  const Grid g(8);
  const Image z(g);
  const auto none = make_no_regularizer(g);
  const auto frac = make_fractional_regularizer(lap(8));
  const auto tv = make_tv_regularizer(g, 1e-5);
  CHECK(penalty_value(*none, RegParams{}, z) == 0.0);
  CHECK(penalty_value(*frac, RegParams{2.0, 0.4}, z) == 0.0);
  // The smoothing term survives at u = 0: one xi per site over the unit square.
  CHECK(penalty_value(*tv, RegParams{2.0, std::nullopt}, z) == doctest::Approx(2.0 * 1e-5).epsilon(1e-12));
  CHECK(grad_term(*none, RegParams{}, z).values.isZero(0.0));
  CHECK(grad_term(*frac, RegParams{2.0, 0.4}, z).values.isZero(0.0));
  CHECK(grad_term(*tv, RegParams{2.0, std::nullopt}, z).values.isZero(0.0));
}

TEST_CASE("no regularizer contributes nothing") {
  const Grid g(5);
  const auto none = make_no_regularizer(g);
  const Image u = random_image(g, 1);
  CHECK(none->params().empty());
  CHECK(penalty_value(*none, RegParams{}, u) == 0.0);
  CHECK(grad_term(*none, RegParams{}, u).values.isZero(0.0));
  CHECK(grad_term_jvp(*none, RegParams{}, u, u).values.isZero(0.0));
  CHECK(grad_term_dmu(*none, RegParams{}, u).empty());
}

TEST_CASE("fractional penalty on an eigenvector") {
  const int n = 8;
  const auto L = lap(n);
  const auto frac = make_fractional_regularizer(L);
  const Image v = L->eigenvector(2, 5);
  const double z = L->eigenvalues()[2 * n + 5];
  CHECK(penalty_value(*frac, RegParams{3.0, 0.6}, v) == doctest::Approx(0.5 * 3.0 * std::pow(z, 0.6)).epsilon(1e-12));
}

TEST_CASE("gradients match central differences of the penalty") {
  const Grid g(16);
  const auto L = lap(16);
  struct Case {
    std::unique_ptr<Regularizer> reg;
    RegParams mu;
  };
  std::vector<Case> cases;
  cases.push_back({make_no_regularizer(g), RegParams{}});
  cases.push_back({make_tv_regularizer(g, 1e-5), RegParams{0.7, std::nullopt}});
  cases.push_back({make_fractional_regularizer(L), RegParams{0.7, 0.4}});
  for (const auto& c : cases) {
    CAPTURE(to_string(c.reg->kind()));
    double worst = 0.0;
    for (std::uint64_t p = 0; p < 20; ++p) {
      const Image u = random_image(g, 200 + p, 0.0, 1.0), v = random_image(g, 300 + p);
      const double eps = 1e-6;
      const double fd =
          (penalty_value(*c.reg, c.mu, shifted(u, v, eps)) - penalty_value(*c.reg, c.mu, shifted(u, v, -eps))) /
          (2 * eps);
      const double an = grad_term(*c.reg, c.mu, u).values.dot(v.values);
      if (c.reg->kind() == RegKind::none) CHECK(fd == 0.0);
      else worst = std::max(worst, oracle::rel_err(an, fd));
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("fractional gradient against the dense oracle and its linearity") {
  const int n = 8;
  const Grid g(n);
  const auto frac = make_fractional_regularizer(lap(n));
  const Image u = random_image(g, 11), v = random_image(g, 12);
  const RegParams mu{1.3, 0.45};
  CHECK(oracle::rel_err(grad_term(*frac, mu, u).values, 1.3 * (oracle::dense_power(n, 0.45) * u.values)) < 1e-9);

  const Vector lin = grad_term(*frac, mu, Image(g, 2.0 * u.values - v.values)).values;
  CHECK(oracle::rel_err(lin, 2.0 * grad_term(*frac, mu, u).values - grad_term(*frac, mu, v).values) < 1e-12);
  CHECK(oracle::rel_err(grad_term(*frac, RegParams{2.6, 0.45}, u).values, 2.0 * grad_term(*frac, mu, u).values) <
        1e-14);

  const Vector s1 = grad_term(*frac, RegParams{0.9, 1.0 - kExponentMargin}, u).values;
  CHECK(oracle::rel_err(s1, 0.9 * (oracle::dense_laplacian(n) * u.values)) < 1e-10);
}

TEST_CASE("fractional jvp is the exact linearization") {
  const Grid g(8);
  const auto frac = make_fractional_regularizer(lap(8));
  const RegParams mu{0.8, 0.3};
  const Image u = random_image(g, 21), v = random_image(g, 22);
  const double eps = 1e-3;
  const Vector fd = (grad_term(*frac, mu, shifted(u, v, eps)).values - grad_term(*frac, mu, u).values) / eps;
  CHECK(oracle::rel_err(grad_term_jvp(*frac, mu, u, v).values, fd) < 1e-6);
  CHECK(grad_term_jvp(*frac, mu, u, Image(g)).values.isZero(0.0));
}

TEST_CASE("tv jvp is the scaled five-point stencil") {
  const int n = 8;
  const Grid g(n);
  const auto tv = make_tv_regularizer(g);
  const RegParams mu{0.6, std::nullopt};
  const Image u = random_image(g, 31), v = random_image(g, 32);
  const double h2 = g.h() * g.h();
  CHECK(oracle::rel_err(grad_term_jvp(*tv, mu, u, v).values, 0.6 * h2 * (oracle::dense_laplacian(n) * v.values)) <
        1e-12);
  CHECK(grad_term_jvp(*tv, mu, u, Image(g)).values.isZero(0.0));
}

TEST_CASE("parameter derivatives") {
  const Grid g(8);
  const auto frac = make_fractional_regularizer(lap(8));
  const Image u = random_image(g, 41);
  const RegParams mu{0.5, 0.35};
  const auto d = grad_term_dmu(*frac, mu, u);
  REQUIRE(d.size() == 2);

  const double el = 1e-4;
  const Vector fl =
      (grad_term(*frac, RegParams{0.5 + el, 0.35}, u).values - grad_term(*frac, RegParams{0.5 - el, 0.35}, u).values) /
      (2 * el);
  CHECK(oracle::rel_err(d[0].values, fl) < 1e-8);

  const double es = 1e-5;
  const Vector fs =
      (grad_term(*frac, RegParams{0.5, 0.35 + es}, u).values - grad_term(*frac, RegParams{0.5, 0.35 - es}, u).values) /
      (2 * es);
  CHECK(oracle::rel_err(d[1].values, fs) < 1e-5);

  const auto tv = make_tv_regularizer(g);
  const RegParams tmu{0.25, std::nullopt};
  const auto dt = grad_term_dmu(*tv, tmu, u);
  REQUIRE(dt.size() == 1);
  CHECK(oracle::rel_err(dt[0].values, grad_term(*tv, tmu, u).values / (2 * 0.25)) < 1e-15);
}

TEST_CASE("local averaging never increases total variation") {
  const int n = 16;
  const Grid g(n);
  const auto tv = make_tv_regularizer(g);
  const RegParams mu{1.0, std::nullopt};
  int violations = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const Image u = random_image(g, 1000 + t, 0.0, 1.0);
    Image avg(g);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        double sum = 0.0;
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            const int rr = r + dr, cc = c + dc;
            if (rr >= 0 && rr < n && cc >= 0 && cc < n) sum += u(rr, cc);
          }
        avg(r, c) = sum / 9.0;
      }
    if (penalty_value(*tv, mu, avg) > penalty_value(*tv, mu, u)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("curvature bounds dominate the jvp operator norm") {
  const Grid g(6);
  const auto N = static_cast<Eigen::Index>(g.size());
  auto jvp_norm = [&](const BoundRegularizer& b) {
    oracle::Matrix M(N, N);
    const Vector u = oracle::random_vector(g.size(), 5, 0.0, 1.0);
    Vector col;
    for (Eigen::Index k = 0; k < N; ++k) {
      b.gradient_jvp(u, Vector::Unit(N, k), col);
      M.col(k) = col;
    }
    return Eigen::JacobiSVD<oracle::Matrix>(M).singularValues()(0);
  };
  const auto frac = make_fractional_regularizer(std::make_shared<const SpectralLaplacian>(SpectralLaplacian::build(g)));
  for (double s : {0.1, 0.5, 0.9}) {
    const auto b = frac->bind({0.3, s});
    CHECK(b->curvature_bound() == doctest::Approx(jvp_norm(*b)).epsilon(1e-10));
  }
  const auto tv = make_tv_regularizer(g)->bind({0.3, std::nullopt});
  CHECK(tv->curvature_bound() >= jvp_norm(*tv));
  CHECK(tv->curvature_bound() <= 1.01 * jvp_norm(*tv) * 8.0 / (4.0 + 4.0 * std::cos(std::numbers::pi / 7)));
  CHECK(make_no_regularizer(g)->bind({})->curvature_bound() == 0.0);
}
