#pragma once

#include <Eigen/Dense>
#include <optional>

#include "facov/estimators.hpp"

namespace facov {

// Eigenvalue floor below which a reference covariance is rejected as not
// positive definite.
inline constexpr double kEigenvalueFloor = 1e-12;

struct LossReport {
  double frobenius = 0.0;
  double sigma_norm = 0.0;
  double quadratic = 0.0;
  std::optional<double> entropy;  // undefined when the estimate is singular
  double max_eigen_dev = 0.0;
};

// {tr(A A')}^{1/2}
double frobenius_norm(const MatrixXd& a);

// p^{-1/2} ||Sigma^{-1/2} A Sigma^{-1/2}|| with the symmetric PD square
// root of the reference.
double sigma_norm(const MatrixXd& a, const CovarianceEstimate& sigma);

// {tr[(Shat Sigma^{-1} - I)^2]}^{1/2}; equals sqrt(p) * sigma_norm of the
// difference.
double quadratic_loss(const CovarianceEstimate& shat,
                      const CovarianceEstimate& sigma);

// Stein loss tr(Shat Sigma^{-1}) - log|Shat Sigma^{-1}| - p, evaluated on
// the symmetrized similarity Sigma^{-1/2} Shat Sigma^{-1/2}.
double entropy_loss(const CovarianceEstimate& shat,
                    const CovarianceEstimate& sigma);

// Eigenvalues of a symmetric matrix sorted descending.
VectorXd eigenvalues_desc(const MatrixXd& a);

// max_k |lambda_k(Shat) - lambda_k(Sigma)| over descending spectra.
double max_eigen_deviation(const CovarianceEstimate& shat,
                           const CovarianceEstimate& sigma);

// All metrics at once; entropy is left empty instead of throwing when the
// estimate is singular.
LossReport loss_report(const CovarianceEstimate& shat,
                       const CovarianceEstimate& sigma);

// Symmetric PD inverse square root via eigendecomposition.
MatrixXd inverse_sqrt(const MatrixXd& sigma);

}  // namespace facov
