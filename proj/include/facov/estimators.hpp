#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "facov/errors.hpp"

namespace facov {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// K x n matrix of factor observations; row i holds the n observations of
// factor i.
struct FactorPanel {
  MatrixXd data;
  std::vector<std::string> labels;  // optional, one per observation

  Index factors() const { return data.rows(); }
  Index observations() const { return data.cols(); }
};

// p x n matrix of excess asset returns; row i holds asset i.
struct ReturnPanel {
  MatrixXd data;
  std::vector<std::string> labels;

  Index assets() const { return data.rows(); }
  Index observations() const { return data.cols(); }
};

// Result of the least-squares factor regression Y = B X + E.
struct FactorModelFit {
  MatrixXd loadings;     // p x K
  MatrixXd factor_cov;   // K x K sample covariance of the factors
  VectorXd resid_diag;   // diagonal of the residual covariance, length p
  MatrixXd residuals;    // p x n
  VectorXd mean;         // loadings * factor_mean, length p
  Index n = 0;
  VectorXd factor_mean;  // length K
};

enum class CovMethod { factor, sample, oracle };

struct CovarianceEstimate {
  MatrixXd matrix;
  CovMethod method = CovMethod::oracle;

  Index dim() const { return matrix.rows(); }
};

// Reciprocal-condition-number cutoff below which symmetric matrices are
// treated as singular.
inline constexpr double kRcondFloor = 1e-12;
// Smallest residual variance accepted by the Woodbury inverse.
inline constexpr double kResidualVarianceFloor = 1e-12;

// Least-squares fit of the observable-factor model.
//   loadings   = Y X'(XX')^{-1}
//   factor_cov = (n-1)^{-1} XX' - {n(n-1)}^{-1} X 1 1' X'
//   resid_diag = diag(n^{-1} E E'),  E = Y - loadings X
FactorModelFit fit_factor_model(const FactorPanel& x, const ReturnPanel& y);

// Substitution covariance estimator: loadings * factor_cov * loadings' +
// diag(resid_diag). Positive definite whenever n >= K and residual
// variances are positive, including p > n.
CovarianceEstimate covariance_factor(const FactorModelFit& fit);

// Standard sample covariance of the return panel.
CovarianceEstimate covariance_sample(const ReturnPanel& y);

// Row means of the return panel.
VectorXd sample_mean(const ReturnPanel& y);

// Inverse of the factor covariance estimate via the
// Sherman-Morrison-Woodbury identity; only K x K dense inversions are
// performed, so this works for p > n.
MatrixXd inverse_factor(const FactorModelFit& fit);

// Dense symmetric inverse with a singularity check.
MatrixXd inverse_generic(const CovarianceEstimate& s);

// H = X'(XX')^{-1}X, the n x n projection onto the factor regression
// space. tr(H) = K and H is idempotent.
MatrixXd hat_matrix(const FactorPanel& x);

// (M + M') / 2
MatrixXd symmetrize(const MatrixXd& m);

}  // namespace facov
