#include <cmath>
#include <random>

#include <doctest.h>

#include "remlkit/dense_oracle.hpp"
#include "toy.hpp"

using namespace remlkit;
using namespace remlkit::oracle;
using remlkit::testing::tiny_model;
using remlkit::testing::toy_model;
using remlkit::testing::toy_theta;

namespace {

Eigen::MatrixXd random_x(int n, int p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(n, p);
  x.col(0).setOnes();
  for (int j = 1; j < p; ++j)
    for (int i = 0; i < n; ++i) x(i, j) = g(rng);
  return x;
}

Eigen::MatrixXd random_spd(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  return a * a.transpose() + (double)n * Eigen::MatrixXd::Identity(n, n);
}

Theta random_theta(int q, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  Theta th;
  th.sigma2 = u(rng);
  for (int k = 0; k < q; ++k) th.kappa.push_back(u(rng));
  return th;
}

}  // namespace

TEST_CASE("l basis: defining relations and projector identities") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const Eigen::MatrixXd x = random_x(30, 4, seed);
    const LBasis lb = build_l_basis(x);
    CHECK((lb.l1.transpose() * x - Eigen::MatrixXd::Identity(4, 4))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK((lb.l2.transpose() * x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(projector_identities(x).max_dev() < 1e-12);
  }
  CHECK_THROWS(build_l_basis(Eigen::MatrixXd::Ones(3, 3)));  // n == p
  Eigen::MatrixXd bad(5, 2);
  bad.col(0).setOnes();
  bad.col(1).setOnes();
  CHECK_THROWS(build_l_basis(bad));  // rank deficient
}

TEST_CASE("P: three routes coincide on simulated data") {
  const ModelSpec m = tiny_model(21);
  const Theta th = random_theta(m.q(), 77);
  CHECK(p_three_ways(m, th).max_dev < 1e-9);
}

TEST_CASE("P equivalence for arbitrary SPD H") {
  for (std::uint64_t seed : {4ull, 5ull}) {
    const Eigen::MatrixXd x = random_x(25, 3, seed);
    const Eigen::MatrixXd h = random_spd(25, seed + 100);
    CHECK(p_equivalence(x, h) < 1e-10);
    CHECK(xhx_identity(x, h) < 1e-10);
  }
}

TEST_CASE("toy xhx identity value") {
  // X = 1_4, H = I + Z Z^T: X'H^-1 X = 4/3... the MME C^XX block is the
  // inverse of X'H^-1 X, equal to 3/4 here.
  const ModelSpec m = toy_model();
  const Theta th = toy_theta();
  const Eigen::MatrixXd h = dense_h(m, th);
  const Eigen::MatrixXd xhx =
      m.X.transpose() * h.llt().solve(m.X);
  CHECK(xhx(0, 0) == doctest::Approx(4.0 / 3.0));
  const CinvBlocks blocks = cinv_blocks(m, th);
  CHECK(blocks.cxx(0, 0) == doctest::Approx(3.0 / 4.0));
}

TEST_CASE("woodbury inverse on the toy model") {
  const ModelSpec m = toy_model();
  const Theta th = toy_theta();
  const Eigen::MatrixXd hinv = woodbury_hinv(m, th);
  CHECK((hinv * dense_h(m, th) - Eigen::MatrixXd::Identity(4, 4))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  // block for records sharing a level: (1/3) [[2,-1],[-1,2]]
  CHECK(hinv(0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(hinv(0, 1) == doctest::Approx(-1.0 / 3.0));
  CHECK(hinv(0, 2) == doctest::Approx(0.0));
}

TEST_CASE("log-det identity on toy and simulated data") {
  {
    const auto id = logdet_identity(toy_model(), toy_theta());
    CHECK(id.lhs == doctest::Approx(std::log(12.0)));
    CHECK(id.rhs == doctest::Approx(std::log(12.0)));
  }
  const ModelSpec m = tiny_model(31);
  const Theta th = random_theta(m.q(), 8);
  const auto id = logdet_identity(m, th);
  CHECK(id.lhs == doctest::Approx(id.rhs).epsilon(1e-10));
}

TEST_CASE("ypy via the L2 route on the toy model") {
  CHECK(ypy_l2(toy_model(), toy_theta()) == doctest::Approx(7.0 / 3.0));
}

TEST_CASE("toy information matrices") {
  const ModelSpec m = toy_model();
  const Theta th = toy_theta();
  const InfoMatrix fisher = info_dense(m, th, InfoKind::fisher);
  const InfoMatrix observed = info_dense(m, th, InfoKind::observed);
  const InfoMatrix avg = average_info_dense(m, th);
  // (sigma2, sigma2): Fisher (n-p)/2 sigma^4 = 3/2, observed
  // y'Py/sigma^6 - (n-p)/2 sigma^4 = 7/3 - 3/2 = 5/6, average y'Py/2 = 7/6.
  CHECK(fisher.values(0, 0) == doctest::Approx(1.5));
  CHECK(observed.values(0, 0) == doctest::Approx(5.0 / 6.0));
  CHECK(avg.values(0, 0) == doctest::Approx(7.0 / 6.0));
  // average information must be the mean of observed and Fisher in the
  // (sigma2, sigma2) and (kappa, kappa) cells for this linear structure
  CHECK(avg.values(0, 0) ==
        doctest::Approx(0.5 * (fisher.values(0, 0) + observed.values(0, 0))));
  CHECK(avg.values(1, 1) ==
        doctest::Approx(0.5 * (fisher.values(1, 1) + observed.values(1, 1))));
}

TEST_CASE("dense trace matches explicit P Hdot product") {
  const ModelSpec m = tiny_model(41);
  const Theta th = random_theta(m.q(), 12);
  const Eigen::MatrixXd p = dense_p(m, th);
  for (int k = 0; k < m.q(); ++k)
    CHECK(trace_p_hdot_dense(m, th, k) ==
          doctest::Approx((p * dense_hdot(m, k)).trace()).epsilon(1e-10));
}

TEST_CASE("scale guard") {
  CHECK_THROWS(require_dense_scale(501));
  CHECK_NOTHROW(require_dense_scale(500));
}
