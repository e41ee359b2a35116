#include "facov/estimators.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

namespace facov {

namespace {

void check_finite(const MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    throw ParseError(std::string(what) + " contains non-finite entries");
  }
}

// Smallest/largest |eigenvalue| ratio of a symmetric matrix.
double symmetric_rcond(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const VectorXd abs_ev = es.eigenvalues().cwiseAbs();
  const double largest = abs_ev.maxCoeff();
  if (largest == 0.0) return 0.0;
  return abs_ev.minCoeff() / largest;
}

}  // namespace

MatrixXd symmetrize(const MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

FactorModelFit fit_factor_model(const FactorPanel& x, const ReturnPanel& y) {
  const Index k = x.factors();
  const Index n = x.observations();
  check_finite(x.data, "factor panel");
  check_finite(y.data, "return panel");
  if (n != y.observations()) {
    throw DimensionMismatch("factor panel has " + std::to_string(n) +
                            " observations, return panel has " +
                            std::to_string(y.observations()));
  }
  if (n < k) {
    throw TooFewObservations("need n >= K to fit, got n=" +
                             std::to_string(n) + ", K=" + std::to_string(k));
  }

  const MatrixXd gram = x.data * x.data.transpose();  // K x K
  if (symmetric_rcond(symmetrize(gram)) < kRcondFloor) {
    throw SingularFactorGram("factor gram matrix XX' is numerically singular");
  }

  FactorModelFit fit;
  fit.n = n;
  const Eigen::LDLT<MatrixXd> gram_ldlt(symmetrize(gram));
  fit.loadings = gram_ldlt.solve(x.data * y.data.transpose()).transpose();

  const VectorXd x_row_sums = x.data.rowwise().sum();
  const double nn = static_cast<double>(n);
  fit.factor_cov = symmetrize(gram / (nn - 1.0) -
                              x_row_sums * x_row_sums.transpose() /
                                  (nn * (nn - 1.0)));
  fit.residuals = y.data - fit.loadings * x.data;
  fit.resid_diag = fit.residuals.rowwise().squaredNorm() / nn;
  fit.factor_mean = x_row_sums / nn;
  fit.mean = fit.loadings * fit.factor_mean;
  return fit;
}

CovarianceEstimate covariance_factor(const FactorModelFit& fit) {
  MatrixXd m =
      fit.loadings * fit.factor_cov * fit.loadings.transpose();
  m.diagonal() += fit.resid_diag;
  return {symmetrize(m), CovMethod::factor};
}

CovarianceEstimate covariance_sample(const ReturnPanel& y) {
  const Index n = y.observations();
  check_finite(y.data, "return panel");
  if (n < 2) {
    throw TooFewObservations("sample covariance needs n >= 2, got n=" +
                             std::to_string(n));
  }
  const double nn = static_cast<double>(n);
  const VectorXd row_sums = y.data.rowwise().sum();
  MatrixXd m = y.data * y.data.transpose() / (nn - 1.0) -
               row_sums * row_sums.transpose() / (nn * (nn - 1.0));
  return {symmetrize(m), CovMethod::sample};
}

VectorXd sample_mean(const ReturnPanel& y) {
  if (y.observations() < 1) {
    throw TooFewObservations("sample mean needs at least one observation");
  }
  return y.data.rowwise().mean();
}

MatrixXd inverse_factor(const FactorModelFit& fit) {
  if ((fit.resid_diag.array() <= kResidualVarianceFloor).any()) {
    throw ZeroResidualVariance(
        "residual variance at or below floor; Woodbury inverse undefined");
  }
  if (symmetric_rcond(fit.factor_cov) < kRcondFloor) {
    throw SingularFactorCov("factor covariance is numerically singular");
  }
  const VectorXd d_inv = fit.resid_diag.cwiseInverse();
  const MatrixXd scaled = d_inv.asDiagonal() * fit.loadings;  // p x K
  const MatrixXd core = symmetrize(
      fit.factor_cov.inverse() + fit.loadings.transpose() * scaled);
  const Eigen::LDLT<MatrixXd> core_ldlt(core);
  MatrixXd inv =
      -scaled * core_ldlt.solve(scaled.transpose());
  inv.diagonal() += d_inv;
  return symmetrize(inv);
}

MatrixXd inverse_generic(const CovarianceEstimate& s) {
  const MatrixXd m = symmetrize(s.matrix);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  const VectorXd abs_ev = es.eigenvalues().cwiseAbs();
  const double largest = abs_ev.maxCoeff();
  const double smallest = abs_ev.minCoeff();
  if (largest == 0.0 || smallest / largest < kRcondFloor) {
    const double cond =
        smallest > 0.0 ? largest / smallest
                       : std::numeric_limits<double>::infinity();
    throw SingularMatrix("matrix is numerically singular (condition number " +
                         std::to_string(cond) + ")");
  }
  const MatrixXd inv = es.eigenvectors() *
                       es.eigenvalues().cwiseInverse().asDiagonal() *
                       es.eigenvectors().transpose();
  return symmetrize(inv);
}

MatrixXd hat_matrix(const FactorPanel& x) {
  const Index k = x.factors();
  const Index n = x.observations();
  if (n < k) {
    throw TooFewObservations("hat matrix needs n >= K");
  }
  const MatrixXd gram = symmetrize(x.data * x.data.transpose());
  if (symmetric_rcond(gram) < kRcondFloor) {
    throw SingularFactorGram("factor gram matrix XX' is numerically singular");
  }
  const Eigen::LDLT<MatrixXd> gram_ldlt(gram);
  return symmetrize(x.data.transpose() * gram_ldlt.solve(x.data));
}

}  // namespace facov
