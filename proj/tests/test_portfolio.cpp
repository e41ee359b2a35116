#include <cmath>
#include <random>

#include "doctest.h"
#include "facov/portfolio.hpp"

using namespace facov;

namespace {

MatrixXd random_spd(Index p, std::mt19937_64& rng, double ridge = 0.5) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd a(p, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < p; ++i) {
      a(i, j) = normal(rng);
    }
  }
  return symmetrize(a * a.transpose() / static_cast<double>(p) +
                    ridge * MatrixXd::Identity(p, p));
}

VectorXd random_vector(Index p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd v(p);
  for (Index i = 0; i < p; ++i) v(i) = normal(rng);
  return v;
}

}  // namespace

TEST_CASE("scalars on the identity fixture") {
  const MatrixXd inv = MatrixXd::Identity(2, 2);
  VectorXd mu(2);
  mu << 1, 2;
  const PortfolioScalars s = portfolio_scalars(inv, mu);
  CHECK(s.varphi == doctest::Approx(2.0));
  CHECK(s.psi == doctest::Approx(3.0));
  CHECK(s.phi == doctest::Approx(5.0));
  CHECK(s.denominator() == doctest::Approx(1.0));
}

TEST_CASE("markowitz weights on the identity fixture") {
  const MatrixXd inv = MatrixXd::Identity(2, 2);
  VectorXd mu(2);
  mu << 1, 2;
  const PortfolioWeights xi = markowitz_weights(inv, mu, 1.5);
  REQUIRE(xi.weights.size() == 2);
  CHECK(xi.weights(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(xi.weights(1) == doctest::Approx(0.5).epsilon(1e-12));
  REQUIRE(xi.target_return.has_value());
  CHECK(*xi.target_return == doctest::Approx(1.5));
}

TEST_CASE("weights satisfy both constraints exactly") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const Index p = 3 + trial;
    const MatrixXd sigma = random_spd(p, rng);
    const MatrixXd inv = sigma.llt().solve(MatrixXd::Identity(p, p));
    const VectorXd mu = random_vector(p, rng);
    const double gamma = 0.3 + 0.1 * trial;
    const PortfolioWeights xi = markowitz_weights(inv, mu, gamma);
    CHECK(xi.weights.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mu.dot(xi.weights) == doctest::Approx(gamma).epsilon(1e-9));
  }
}

TEST_CASE("closed-form variance matches xi' Sigma xi") {
  std::mt19937_64 rng(22);
  const Index p = 6;
  const MatrixXd sigma = random_spd(p, rng);
  const MatrixXd inv = sigma.llt().solve(MatrixXd::Identity(p, p));
  const VectorXd mu = random_vector(p, rng);
  const PortfolioScalars s = portfolio_scalars(inv, mu);
  CovarianceEstimate est{sigma, CovMethod::oracle};
  for (double gamma : {-0.5, 0.0, 0.2, 1.0, 3.0}) {
    const PortfolioWeights xi = markowitz_weights(inv, mu, gamma);
    CHECK(portfolio_variance(est, xi) ==
          doctest::Approx(minimum_variance_closed_form(s, gamma))
              .epsilon(1e-9));
  }
}

TEST_CASE("optimal weights beat any feasible competitor") {
  std::mt19937_64 rng(23);
  const Index p = 8;
  const MatrixXd sigma = random_spd(p, rng);
  const MatrixXd inv = sigma.llt().solve(MatrixXd::Identity(p, p));
  const VectorXd mu = random_vector(p, rng);
  const double gamma = 0.7;
  const PortfolioWeights xi = markowitz_weights(inv, mu, gamma);
  CovarianceEstimate est{sigma, CovMethod::oracle};
  const double best = portfolio_variance(est, xi);
  // Perturb inside the feasible affine subspace: directions orthogonal to
  // both 1 and mu keep the constraints.
  for (int trial = 0; trial < 25; ++trial) {
    VectorXd d = random_vector(p, rng);
    const VectorXd ones = VectorXd::Ones(p);
    d -= ones * (d.dot(ones) / ones.squaredNorm());
    VectorXd m = mu - ones * (mu.dot(ones) / ones.squaredNorm());
    if (m.squaredNorm() > 1e-14) {
      d -= m * (d.dot(m) / m.squaredNorm());
    }
    PortfolioWeights other{xi.weights + d, gamma};
    CHECK(other.weights.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mu.dot(other.weights) == doctest::Approx(gamma).epsilon(1e-8));
    CHECK(portfolio_variance(est, other) >= best - 1e-10);
  }
}

TEST_CASE("global minimum variance portfolio") {
  std::mt19937_64 rng(24);
  const Index p = 5;
  const MatrixXd sigma = random_spd(p, rng);
  const MatrixXd inv = sigma.llt().solve(MatrixXd::Identity(p, p));
  const PortfolioWeights w = global_min_variance_weights(inv);
  CHECK(w.weights.sum() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_FALSE(w.target_return.has_value());
  CovarianceEstimate est{sigma, CovMethod::oracle};
  const double varphi = VectorXd::Ones(p).dot(inv * VectorXd::Ones(p));
  CHECK(portfolio_variance(est, w) ==
        doctest::Approx(1.0 / varphi).epsilon(1e-10));
  // It is the vertex of the frontier parabola in gamma.
  const VectorXd mu = random_vector(p, rng);
  const PortfolioScalars s = portfolio_scalars(inv, mu);
  const double vertex_gamma = s.psi / s.varphi;
  CHECK(minimum_variance_closed_form(s, vertex_gamma) ==
        doctest::Approx(1.0 / s.varphi).epsilon(1e-10));
  CHECK(minimum_variance_closed_form(s, vertex_gamma + 0.1) >=
        1.0 / s.varphi);
  CHECK(minimum_variance_closed_form(s, vertex_gamma - 0.1) >=
        1.0 / s.varphi);
}

TEST_CASE("degenerate frontier when mu is proportional to 1") {
  const MatrixXd inv = MatrixXd::Identity(3, 3);
  const VectorXd mu = 2.0 * VectorXd::Ones(3);
  CHECK_THROWS_AS(markowitz_weights(inv, mu, 0.5), DegenerateFrontier);
  const PortfolioScalars s = portfolio_scalars(inv, mu);
  CHECK_THROWS_AS(minimum_variance_closed_form(s, 0.5), DegenerateFrontier);
  // The global minimum-variance portfolio does not involve mu and stays
  // well defined.
  const PortfolioWeights w = global_min_variance_weights(inv);
  CHECK(w.weights.sum() == doctest::Approx(1.0));
}

TEST_CASE("plug-in portfolio from a factor fit matches the dense route") {
  std::mt19937_64 rng(25);
  const int n = 120, p = 10, k = 3;
  std::normal_distribution<double> normal(0.0, 1.0);
  FactorPanel x;
  x.data.resize(k, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < k; ++i) x.data(i, j) = normal(rng);
  }
  MatrixXd b(p, k);
  for (Index j = 0; j < k; ++j) {
    for (Index i = 0; i < p; ++i) b(i, j) = 0.5 + 0.2 * normal(rng);
  }
  ReturnPanel y;
  y.data = b * x.data;
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < p; ++i) y.data(i, j) += 0.3 * normal(rng);
  }
  const FactorModelFit fit = fit_factor_model(x, y);
  const CovarianceEstimate est = covariance_factor(fit);
  const VectorXd mu = fit.loadings * fit.factor_mean;

  for (std::optional<double> gamma :
       {std::optional<double>{0.05}, std::optional<double>{}}) {
    const PlugInResult via_fit = plug_in_portfolio(fit, gamma);
    const PlugInResult via_dense = plug_in_portfolio(est, mu, gamma);
    CHECK((via_fit.weights.weights - via_dense.weights.weights)
              .cwiseAbs()
              .maxCoeff() < 1e-9);
    CHECK(via_fit.variance ==
          doctest::Approx(via_dense.variance).epsilon(1e-9));
    CHECK(via_fit.scalars.varphi ==
          doctest::Approx(via_dense.scalars.varphi).epsilon(1e-9));
    CHECK(via_fit.scalars.psi ==
          doctest::Approx(via_dense.scalars.psi).epsilon(1e-9));
    CHECK(via_fit.scalars.phi ==
          doctest::Approx(via_dense.scalars.phi).epsilon(1e-9));
  }
}

TEST_CASE("scale behaviour of the frontier") {
  std::mt19937_64 rng(26);
  const Index p = 6;
  const MatrixXd sigma = random_spd(p, rng);
  const MatrixXd inv = sigma.llt().solve(MatrixXd::Identity(p, p));
  const VectorXd mu = random_vector(p, rng);
  const double gamma = 0.4;
  const PortfolioWeights xi = markowitz_weights(inv, mu, gamma);
  // Scaling Sigma by c leaves the weights unchanged and scales the
  // minimum variance by c.
  const double c = 2.75;
  const MatrixXd inv_scaled = inv / c;
  const PortfolioWeights xi_scaled = markowitz_weights(inv_scaled, mu, gamma);
  CHECK((xi.weights - xi_scaled.weights).cwiseAbs().maxCoeff() < 1e-10);
  const PortfolioScalars s = portfolio_scalars(inv, mu);
  const PortfolioScalars s_scaled = portfolio_scalars(inv_scaled, mu);
  CHECK(minimum_variance_closed_form(s_scaled, gamma) ==
        doctest::Approx(c * minimum_variance_closed_form(s, gamma))
            .epsilon(1e-10));
}

TEST_CASE("dimension mismatches are rejected") {
  const MatrixXd inv = MatrixXd::Identity(3, 3);
  const VectorXd mu = VectorXd::Ones(4);
  CHECK_THROWS_AS(portfolio_scalars(inv, mu), DimensionMismatch);
  CHECK_THROWS_AS(markowitz_weights(inv, mu, 0.5), DimensionMismatch);
  CovarianceEstimate est{MatrixXd::Identity(3, 3), CovMethod::oracle};
  PortfolioWeights w{VectorXd::Ones(4) / 4.0, std::nullopt};
  CHECK_THROWS_AS(portfolio_variance(est, w), DimensionMismatch);
}
