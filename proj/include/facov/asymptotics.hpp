#pragma once

#include <Eigen/Dense>
#include <functional>

#include "facov/errors.hpp"

namespace facov {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Column-major stacking of a q x r matrix.
VectorXd vec(const MatrixXd& a);

// Column-major lower-triangle stacking of a symmetric d x d matrix:
// (1,1),(2,1),...,(d,1),(2,2),...
VectorXd vech(const MatrixXd& a);

// Position of entry (i, j), i >= j, inside vech of order d.
inline Eigen::Index vech_index(Eigen::Index i, Eigen::Index j,
                               Eigen::Index d) {
  return j * d - j * (j - 1) / 2 + (i - j);
}

// The unique 0/1 matrix D with D vech(A) = vec(A) for symmetric A,
// together with its left inverse P = (D'D)^{-1}D'.
struct DuplicationMatrix {
  Eigen::Index order = 0;
  MatrixXd matrix;    // d^2 x d(d+1)/2
  MatrixXd left_inv;  // d(d+1)/2 x d^2
};

DuplicationMatrix duplication_matrix(Eigen::Index d);

MatrixXd kronecker(const MatrixXd& a, const MatrixXd& b);

// Central fourth moment accessor kappa^{ijkl} (0-based indices).
using FourthMomentFn =
    std::function<double(Eigen::Index, Eigen::Index, Eigen::Index,
                         Eigen::Index)>;

// cov[vech(U)] with cov(u_ij, u_kl) = sigma_ik sigma_jl + sigma_il
// sigma_jk (Gaussian factors).
MatrixXd gaussian_h(const MatrixXd& cov_f);

// cov[vech(U)] with cov(u_ij, u_kl) = kappa^{ijkl} + kappa^{ik}kappa^{jl}
// + kappa^{il}kappa^{jk}.
MatrixXd general_h(const FourthMomentFn& fourth, const MatrixXd& cov_f);

// G = P (A kron A) D H D' (A kron A) P'
MatrixXd asymptotic_g(const MatrixXd& a, const MatrixXd& h);

// sqrt(n) vech(p^{-2} B'(Sigma_hat - Sigma) B)
VectorXd clt_statistic(const MatrixXd& b, const MatrixXd& sigma_hat,
                       const MatrixXd& sigma, Eigen::Index n);

}  // namespace facov
