#pragma once

#include <Eigen/Dense>
#include <optional>

#include "facov/estimators.hpp"

namespace facov {

// Quadratic forms of the frontier: varphi = 1'S^{-1}1, psi = 1'S^{-1}mu,
// phi = mu'S^{-1}mu.
struct PortfolioScalars {
  double varphi = 0.0;
  double psi = 0.0;
  double phi = 0.0;

  double denominator() const { return varphi * phi - psi * psi; }
};

struct PortfolioWeights {
  VectorXd weights;
  std::optional<double> target_return;
};

// Relative floor under which varphi*phi - psi^2 counts as degenerate
// (mu proportional to 1).
inline constexpr double kFrontierFloor = 1e-10;

PortfolioScalars portfolio_scalars(const MatrixXd& sigma_inv,
                                   const VectorXd& mu);

// Closed-form mean-variance optimal weights for target return gamma.
PortfolioWeights markowitz_weights(const MatrixXd& sigma_inv,
                                   const VectorXd& mu, double gamma);

// xi' Sigma xi
double portfolio_variance(const CovarianceEstimate& sigma,
                          const PortfolioWeights& xi);

// (varphi g^2 - 2 psi g + phi) / (varphi phi - psi^2)
double minimum_variance_closed_form(const PortfolioScalars& scalars,
                                    double gamma);

// S^{-1}1 / (1'S^{-1}1); its variance under S is 1/varphi.
PortfolioWeights global_min_variance_weights(const MatrixXd& sigma_inv);

struct PlugInResult {
  PortfolioWeights weights;
  double variance = 0.0;  // under the estimated covariance
  PortfolioScalars scalars;
};

// Plug-in portfolio from a factor fit (Woodbury inverse, mean = B fbar) or
// from an explicit covariance estimate and mean (dense inverse). A missing
// gamma selects the global minimum-variance portfolio.
PlugInResult plug_in_portfolio(const FactorModelFit& fit,
                               std::optional<double> gamma);
PlugInResult plug_in_portfolio(const CovarianceEstimate& sigma,
                               const VectorXd& mu,
                               std::optional<double> gamma);

}  // namespace facov
