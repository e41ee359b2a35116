#include <cmath>
#include <random>

#include "doctest.h"
#include "facov/losses.hpp"

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

MatrixXd random_orthogonal(Index p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd a(p, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < p; ++i) {
      a(i, j) = normal(rng);
    }
  }
  return Eigen::HouseholderQR<MatrixXd>(a).householderQ();
}

}  // namespace

TEST_CASE("frobenius norm basics") {
  CHECK(frobenius_norm(MatrixXd::Zero(3, 4)) == 0.0);
  CHECK(frobenius_norm(MatrixXd::Identity(7, 7)) ==
        doctest::Approx(std::sqrt(7.0)));
  MatrixXd a(2, 2);
  a << 3, 4, 0, 0;
  CHECK(frobenius_norm(a) == doctest::Approx(5.0));
}

TEST_CASE("sigma norm of the reference itself is one") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Index p = 2 + trial * 3;
    CovarianceEstimate sigma{random_spd(p, rng), CovMethod::oracle};
    CHECK(sigma_norm(sigma.matrix, sigma) ==
          doctest::Approx(1.0).epsilon(1e-10));
    CHECK(sigma_norm(MatrixXd::Zero(p, p), sigma) == 0.0);
  }
}

TEST_CASE("sigma norm diagonal oracle") {
  CovarianceEstimate sigma{MatrixXd::Zero(2, 2), CovMethod::oracle};
  sigma.matrix(0, 0) = 4.0;
  sigma.matrix(1, 1) = 1.0;
  MatrixXd a = MatrixXd::Zero(2, 2);
  a(0, 0) = 4.0;
  a(1, 1) = 2.0;
  // 2^{-1/2} ||diag(1,2)|| = sqrt(5/2)
  CHECK(sigma_norm(a, sigma) ==
        doctest::Approx(std::sqrt(2.5)).epsilon(1e-12));
}

TEST_CASE("sigma norm rejects singular references") {
  CovarianceEstimate sigma{MatrixXd::Zero(2, 2), CovMethod::oracle};
  sigma.matrix(0, 0) = 1.0;
  CHECK_THROWS_AS(sigma_norm(MatrixXd::Identity(2, 2), sigma),
                  NotPositiveDefinite);
}

TEST_CASE("quadratic loss and its sigma-norm identity") {
  std::mt19937_64 rng(12);
  const Index p = 5;
  CovarianceEstimate sigma{random_spd(p, rng), CovMethod::oracle};
  CovarianceEstimate shat{random_spd(p, rng), CovMethod::oracle};
  CHECK(quadratic_loss(sigma, sigma) == doctest::Approx(0.0).epsilon(1e-10));

  const double q = quadratic_loss(shat, sigma);
  const double via_norm =
      std::sqrt(static_cast<double>(p)) *
      sigma_norm(shat.matrix - sigma.matrix, sigma);
  CHECK(q == doctest::Approx(via_norm).epsilon(1e-10));

  CovarianceEstimate id{MatrixXd::Identity(4, 4), CovMethod::oracle};
  CovarianceEstimate bump{MatrixXd::Identity(4, 4), CovMethod::oracle};
  bump.matrix(0, 0) = 2.0;
  CHECK(quadratic_loss(bump, id) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("entropy loss") {
  const Index p = 6;
  CovarianceEstimate id{MatrixXd::Identity(p, p), CovMethod::oracle};
  CHECK(entropy_loss(id, id) == doctest::Approx(0.0).epsilon(1e-12));

  CovarianceEstimate bump{MatrixXd::Identity(p, p), CovMethod::oracle};
  bump.matrix(0, 0) = 2.0;
  CHECK(entropy_loss(bump, id) ==
        doctest::Approx(1.0 - std::log(2.0)).epsilon(1e-12));

  // Nonnegative, zero only at equality; cross-checked against the
  // eigenvalue form sum(lambda - log(lambda) - 1).
  std::mt19937_64 rng(13);
  CovarianceEstimate sigma{random_spd(4, rng), CovMethod::oracle};
  CovarianceEstimate shat{random_spd(4, rng), CovMethod::oracle};
  const double loss = entropy_loss(shat, sigma);
  CHECK(loss >= 0.0);
  const MatrixXd isq = inverse_sqrt(sigma.matrix);
  const VectorXd ev = eigenvalues_desc(symmetrize(isq * shat.matrix * isq));
  double expected = 0.0;
  for (Index i = 0; i < ev.size(); ++i) {
    expected += ev(i) - std::log(ev(i)) - 1.0;
  }
  CHECK(loss == doctest::Approx(expected).epsilon(1e-10));

  CovarianceEstimate singular{MatrixXd::Zero(2, 2), CovMethod::sample};
  singular.matrix(0, 0) = 1.0;
  CovarianceEstimate ref{MatrixXd::Identity(2, 2), CovMethod::oracle};
  CHECK_THROWS_AS(entropy_loss(singular, ref), NotPositiveDefinite);
}

TEST_CASE("eigenvalues_desc") {
  MatrixXd d = MatrixXd::Zero(3, 3);
  d.diagonal() << 1, 3, 2;
  const VectorXd ev = eigenvalues_desc(d);
  CHECK(ev(0) == doctest::Approx(3.0));
  CHECK(ev(1) == doctest::Approx(2.0));
  CHECK(ev(2) == doctest::Approx(1.0));

  const VectorXd id_ev = eigenvalues_desc(MatrixXd::Identity(4, 4));
  CHECK(id_ev.minCoeff() == doctest::Approx(1.0));
  CHECK(id_ev.maxCoeff() == doctest::Approx(1.0));

  MatrixXd swap(2, 2);
  swap << 0, 1, 1, 0;
  const VectorXd sw = eigenvalues_desc(swap);
  CHECK(sw(0) == doctest::Approx(1.0));
  CHECK(sw(1) == doctest::Approx(-1.0));

  MatrixXd asym(2, 2);
  asym << 0, 1, 0, 0;
  CHECK_THROWS_AS(eigenvalues_desc(asym), NotSymmetric);
}

TEST_CASE("max eigen deviation and the Weyl bound") {
  CovarianceEstimate id{MatrixXd::Identity(2, 2), CovMethod::oracle};
  CHECK(max_eigen_deviation(id, id) == doctest::Approx(0.0));

  CovarianceEstimate spread{MatrixXd::Zero(2, 2), CovMethod::oracle};
  spread.matrix.diagonal() << 3.0, 0.5;
  CHECK(max_eigen_deviation(spread, id) == doctest::Approx(2.0));

  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    CovarianceEstimate a{random_spd(6, rng), CovMethod::oracle};
    CovarianceEstimate b{random_spd(6, rng), CovMethod::oracle};
    CHECK(max_eigen_deviation(a, b) <=
          frobenius_norm(a.matrix - b.matrix) + 1e-12);
  }
}

TEST_CASE("sigma norm is invariant under orthogonal congruence") {
  std::mt19937_64 rng(15);
  const Index p = 7;
  const MatrixXd sigma = random_spd(p, rng);
  const MatrixXd a = symmetrize(random_spd(p, rng) - sigma);
  const MatrixXd q = random_orthogonal(p, rng);
  CovarianceEstimate ref{sigma, CovMethod::oracle};
  CovarianceEstimate rotated{symmetrize(q * sigma * q.transpose()),
                             CovMethod::oracle};
  CHECK(sigma_norm(a, ref) ==
        doctest::Approx(sigma_norm(q * a * q.transpose(), rotated))
            .epsilon(1e-10));
}

TEST_CASE("trace and product inequalities on random instances") {
  std::mt19937_64 rng(16);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    MatrixXd a(5, 5), b(5, 5);
    for (Index j = 0; j < 5; ++j) {
      for (Index i = 0; i < 5; ++i) {
        a(i, j) = normal(rng);
        b(i, j) = normal(rng);
      }
    }
    CHECK(frobenius_norm(a * b) <=
          frobenius_norm(a) * frobenius_norm(b) + 1e-12);
    CHECK(std::abs((a * b).trace()) <=
          frobenius_norm(a) * frobenius_norm(b) + 1e-12);
  }
}

TEST_CASE("loss report is all zeros on (Sigma, Sigma)") {
  std::mt19937_64 rng(17);
  CovarianceEstimate sigma{random_spd(5, rng), CovMethod::oracle};
  const LossReport r = loss_report(sigma, sigma);
  CHECK(r.frobenius == doctest::Approx(0.0));
  CHECK(r.sigma_norm == doctest::Approx(0.0));
  CHECK(r.quadratic == doctest::Approx(0.0).epsilon(1e-10));
  REQUIRE(r.entropy.has_value());
  CHECK(*r.entropy == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(r.max_eigen_dev == doctest::Approx(0.0));
}
