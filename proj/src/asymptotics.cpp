#include "facov/asymptotics.hpp"

#include <cmath>
#include <string>

namespace facov {

using Eigen::Index;

VectorXd vec(const MatrixXd& a) {
  return Eigen::Map<const VectorXd>(a.data(), a.size());
}

VectorXd vech(const MatrixXd& a) {
  const Index d = a.rows();
  if (a.cols() != d) {
    throw NotSymmetric("vech requires a square matrix");
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw NotSymmetric("vech requires a symmetric matrix");
  }
  VectorXd out(d * (d + 1) / 2);
  Index idx = 0;
  for (Index j = 0; j < d; ++j) {
    for (Index i = j; i < d; ++i) {
      out(idx++) = a(i, j);
    }
  }
  return out;
}

DuplicationMatrix duplication_matrix(Index d) {
  DuplicationMatrix dup;
  dup.order = d;
  dup.matrix = MatrixXd::Zero(d * d, d * (d + 1) / 2);
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < d; ++i) {
      const Index row = j * d + i;  // vec position of (i, j)
      const Index col = i >= j ? vech_index(i, j, d) : vech_index(j, i, d);
      dup.matrix(row, col) = 1.0;
    }
  }
  // D'D is diagonal (1 for diagonal entries, 2 for off-diagonal pairs).
  const MatrixXd dtd = dup.matrix.transpose() * dup.matrix;
  dup.left_inv = dtd.ldlt().solve(dup.matrix.transpose());
  return dup;
}

MatrixXd kronecker(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
          a(i, j) * b;
    }
  }
  return out;
}

namespace {

struct VechPairs {
  std::vector<std::pair<Index, Index>> pairs;

  explicit VechPairs(Index d) {
    pairs.reserve(d * (d + 1) / 2);
    for (Index j = 0; j < d; ++j) {
      for (Index i = j; i < d; ++i) {
        pairs.emplace_back(i, j);
      }
    }
  }
};

MatrixXd build_h(const MatrixXd& cov_f,
                 const std::function<double(Index, Index, Index, Index)>&
                     cov_u) {
  const Index d = cov_f.rows();
  if (cov_f.cols() != d) {
    throw NotSymmetric("factor covariance must be square");
  }
  const VechPairs vp(d);
  const Index m = static_cast<Index>(vp.pairs.size());
  MatrixXd h(m, m);
  for (Index r = 0; r < m; ++r) {
    for (Index c = r; c < m; ++c) {
      const auto [i, j] = vp.pairs[r];
      const auto [k, l] = vp.pairs[c];
      h(r, c) = h(c, r) = cov_u(i, j, k, l);
    }
  }
  return h;
}

}  // namespace

MatrixXd gaussian_h(const MatrixXd& cov_f) {
  return build_h(cov_f, [&](Index i, Index j, Index k, Index l) {
    return cov_f(i, k) * cov_f(j, l) + cov_f(i, l) * cov_f(j, k);
  });
}

MatrixXd general_h(const FourthMomentFn& fourth, const MatrixXd& cov_f) {
  if (!fourth) {
    throw MissingMoment("fourth-moment accessor is empty");
  }
  return build_h(cov_f, [&](Index i, Index j, Index k, Index l) {
    return fourth(i, j, k, l) + cov_f(i, k) * cov_f(j, l) +
           cov_f(i, l) * cov_f(j, k);
  });
}

MatrixXd asymptotic_g(const MatrixXd& a, const MatrixXd& h) {
  const Index d = a.rows();
  if (a.cols() != d || h.rows() != d * (d + 1) / 2 ||
      h.cols() != h.rows()) {
    throw DimensionMismatch("asymptotic_g: nonconformable A and H");
  }
  const DuplicationMatrix dup = duplication_matrix(d);
  const MatrixXd aa = kronecker(a, a);
  const MatrixXd left = dup.left_inv * aa * dup.matrix;  // vech -> vech
  const MatrixXd g = left * h * left.transpose();
  return 0.5 * (g + g.transpose());
}

VectorXd clt_statistic(const MatrixXd& b, const MatrixXd& sigma_hat,
                       const MatrixXd& sigma, Index n) {
  const Index p = b.rows();
  if (sigma_hat.rows() != p || sigma_hat.cols() != p ||
      sigma.rows() != p || sigma.cols() != p) {
    throw DimensionMismatch("clt_statistic: dimension mismatch");
  }
  const double pp = static_cast<double>(p);
  const MatrixXd inner =
      b.transpose() * (sigma_hat - sigma) * b / (pp * pp);
  return std::sqrt(static_cast<double>(n)) *
         vech(0.5 * (inner + inner.transpose()));
}

}  // namespace facov
