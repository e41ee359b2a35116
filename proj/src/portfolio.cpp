#include "facov/portfolio.hpp"

#include <cmath>
#include <string>

namespace facov {

PortfolioScalars portfolio_scalars(const MatrixXd& sigma_inv,
                                   const VectorXd& mu) {
  if (sigma_inv.rows() != sigma_inv.cols() ||
      sigma_inv.rows() != mu.size()) {
    throw DimensionMismatch("portfolio_scalars: dimension mismatch");
  }
  const VectorXd ones = VectorXd::Ones(mu.size());
  const VectorXd si_one = sigma_inv * ones;
  PortfolioScalars s;
  s.varphi = ones.dot(si_one);
  s.psi = mu.dot(si_one);
  s.phi = mu.dot(sigma_inv * mu);
  return s;
}

namespace {

void check_frontier(const PortfolioScalars& s) {
  if (s.denominator() <= kFrontierFloor * std::abs(s.varphi * s.phi)) {
    throw DegenerateFrontier(
        "varphi*phi - psi^2 is numerically zero (mu proportional to 1)");
  }
}

}  // namespace

PortfolioWeights markowitz_weights(const MatrixXd& sigma_inv,
                                   const VectorXd& mu, double gamma) {
  const PortfolioScalars s = portfolio_scalars(sigma_inv, mu);
  check_frontier(s);
  const double den = s.denominator();
  const VectorXd ones = VectorXd::Ones(mu.size());
  PortfolioWeights w;
  w.weights = ((s.phi - gamma * s.psi) / den) * (sigma_inv * ones) +
              ((gamma * s.varphi - s.psi) / den) * (sigma_inv * mu);
  w.target_return = gamma;
  return w;
}

double portfolio_variance(const CovarianceEstimate& sigma,
                          const PortfolioWeights& xi) {
  if (sigma.dim() != xi.weights.size()) {
    throw DimensionMismatch("portfolio_variance: dimension mismatch");
  }
  return xi.weights.dot(sigma.matrix * xi.weights);
}

double minimum_variance_closed_form(const PortfolioScalars& scalars,
                                    double gamma) {
  check_frontier(scalars);
  return (scalars.varphi * gamma * gamma - 2.0 * scalars.psi * gamma +
          scalars.phi) /
         scalars.denominator();
}

PortfolioWeights global_min_variance_weights(const MatrixXd& sigma_inv) {
  const Index p = sigma_inv.rows();
  const VectorXd ones = VectorXd::Ones(p);
  const VectorXd si_one = sigma_inv * ones;
  const double varphi = ones.dot(si_one);
  if (varphi <= kFrontierFloor) {
    throw DegenerateInverse("1'S^{-1}1 is not positive");
  }
  PortfolioWeights w;
  w.weights = si_one / varphi;
  return w;
}

namespace {

PlugInResult plug_in_from_inverse(const MatrixXd& sigma_inv,
                                  const CovarianceEstimate& sigma,
                                  const VectorXd& mu,
                                  std::optional<double> gamma) {
  PlugInResult result;
  result.scalars = portfolio_scalars(sigma_inv, mu);
  if (gamma) {
    result.weights = markowitz_weights(sigma_inv, mu, *gamma);
  } else {
    result.weights = global_min_variance_weights(sigma_inv);
  }
  result.variance = portfolio_variance(sigma, result.weights);
  return result;
}

}  // namespace

PlugInResult plug_in_portfolio(const FactorModelFit& fit,
                               std::optional<double> gamma) {
  return plug_in_from_inverse(inverse_factor(fit), covariance_factor(fit),
                              fit.mean, gamma);
}

PlugInResult plug_in_portfolio(const CovarianceEstimate& sigma,
                               const VectorXd& mu,
                               std::optional<double> gamma) {
  return plug_in_from_inverse(inverse_generic(sigma), sigma, mu, gamma);
}

}  // namespace facov
