#include "facov/losses.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>

namespace facov {

namespace {

void check_symmetric(const MatrixXd& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw NotSymmetric(std::string(what) + " is not square");
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double dev = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (dev > 1e-8 * scale) {
    throw NotSymmetric(std::string(what) + " deviates from symmetry by " +
                       std::to_string(dev));
  }
}

}  // namespace

double frobenius_norm(const MatrixXd& a) { return a.norm(); }

MatrixXd inverse_sqrt(const MatrixXd& sigma) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(sigma));
  const VectorXd& ev = es.eigenvalues();
  if (ev.minCoeff() <= kEigenvalueFloor) {
    throw NotPositiveDefinite("reference matrix has eigenvalue " +
                              std::to_string(ev.minCoeff()) +
                              " at or below floor");
  }
  return es.eigenvectors() *
         ev.array().rsqrt().matrix().asDiagonal() *
         es.eigenvectors().transpose();
}

double sigma_norm(const MatrixXd& a, const CovarianceEstimate& sigma) {
  if (a.rows() != sigma.dim() || a.cols() != sigma.dim()) {
    throw DimensionMismatch("sigma_norm: argument dimension mismatch");
  }
  const MatrixXd isq = inverse_sqrt(sigma.matrix);
  const double p = static_cast<double>(sigma.dim());
  return (isq * a * isq).norm() / std::sqrt(p);
}

double quadratic_loss(const CovarianceEstimate& shat,
                      const CovarianceEstimate& sigma) {
  if (shat.dim() != sigma.dim()) {
    throw DimensionMismatch("quadratic_loss: dimension mismatch");
  }
  const MatrixXd isq = inverse_sqrt(sigma.matrix);
  return (isq * (shat.matrix - sigma.matrix) * isq).norm();
}

double entropy_loss(const CovarianceEstimate& shat,
                    const CovarianceEstimate& sigma) {
  if (shat.dim() != sigma.dim()) {
    throw DimensionMismatch("entropy_loss: dimension mismatch");
  }
  const MatrixXd isq = inverse_sqrt(sigma.matrix);
  const MatrixXd similarity = symmetrize(isq * shat.matrix * isq);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(similarity,
                                             Eigen::EigenvaluesOnly);
  const VectorXd& ev = es.eigenvalues();
  if (ev.minCoeff() <= kEigenvalueFloor) {
    throw NotPositiveDefinite(
        "entropy loss undefined: estimate is singular relative to the "
        "reference");
  }
  double loss = 0.0;
  for (Index i = 0; i < ev.size(); ++i) {
    loss += ev(i) - std::log(ev(i)) - 1.0;
  }
  return loss;
}

VectorXd eigenvalues_desc(const MatrixXd& a) {
  check_symmetric(a, "matrix");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(a),
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

double max_eigen_deviation(const CovarianceEstimate& shat,
                           const CovarianceEstimate& sigma) {
  if (shat.dim() != sigma.dim()) {
    throw DimensionMismatch("max_eigen_deviation: dimension mismatch");
  }
  const VectorXd a = eigenvalues_desc(shat.matrix);
  const VectorXd b = eigenvalues_desc(sigma.matrix);
  return (a - b).cwiseAbs().maxCoeff();
}

LossReport loss_report(const CovarianceEstimate& shat,
                       const CovarianceEstimate& sigma) {
  LossReport report;
  const MatrixXd diff = shat.matrix - sigma.matrix;
  report.frobenius = frobenius_norm(diff);
  report.sigma_norm = sigma_norm(diff, sigma);
  report.quadratic = quadratic_loss(shat, sigma);
  report.max_eigen_dev = max_eigen_deviation(shat, sigma);
  try {
    report.entropy = entropy_loss(shat, sigma);
  } catch (const NotPositiveDefinite&) {
    report.entropy.reset();
  }
  return report;
}

}  // namespace facov
