#include <doctest.h>

#include <random>

#include "octrasl/prox.hpp"
#include "octrasl/rpca.hpp"
#include "support.hpp"

using namespace octrasl;
using octrasl::testing::make_rpca_problem;
using octrasl::testing::random_matrix;

TEST_CASE("default lambda") {
  CHECK(default_lambda(100, 100) == doctest::Approx(0.1));
  CHECK(default_lambda(400, 25) == doctest::Approx(0.05));
  CHECK(default_lambda(1, 1) == 1.0);
}

TEST_CASE("config validation") {
  RpcaConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  auto rejects = [](auto mutate) {
    RpcaConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), Error);
  };
  rejects([](RpcaConfig& c) { c.lambda = 0.0; });
  rejects([](RpcaConfig& c) { c.tol = 0.0; });
  rejects([](RpcaConfig& c) { c.max_iters = 0; });
  rejects([](RpcaConfig& c) { c.mu0 = -1.0; });
  rejects([](RpcaConfig& c) { c.rho = 1.0; });
}

TEST_CASE("rank-1 positive input is all low rank") {
  Vector a(30), b(20);
  for (Index i = 0; i < 30; ++i) a(i) = 1.0 + 0.1 * static_cast<double>(i);
  for (Index j = 0; j < 20; ++j) b(j) = 2.0 - 0.05 * static_cast<double>(j);
  const Matrix d = a * b.transpose();
  const RpcaResult r = rpca_ialm(d);
  CHECK(r.converged);
  CHECK((r.low_rank - d).norm() / d.norm() < 1e-6);
  CHECK(r.sparse.norm() / d.norm() < 1e-6);
}

TEST_CASE("zero input finishes at once") {
  const RpcaResult r = rpca_ialm(Matrix::Zero(5, 4));
  CHECK(r.converged);
  CHECK(r.iterations == 1);
  CHECK(r.low_rank.isZero(0.0));
  CHECK(r.sparse.isZero(0.0));
}

TEST_CASE("rank-2 plus 5% outliers is recovered") {
  const auto p = make_rpca_problem(50, 2, 0.05, 21);
  const RpcaResult r = rpca_ialm(p.data);
  CHECK(r.converged);
  CHECK((r.low_rank - p.low_rank).norm() / p.low_rank.norm() < 1e-4);
  CHECK((r.sparse - p.sparse).norm() / p.sparse.norm() < 1e-4);
}

TEST_CASE("converged runs satisfy the stopping tolerance") {
  const auto p = make_rpca_problem(40, 3, 0.05, 5);
  RpcaConfig cfg;
  cfg.tol = 1e-8;
  const RpcaResult r = rpca_ialm(p.data, cfg);
  REQUIRE(r.converged);
  CHECK((p.data - r.low_rank - r.sparse).norm() / p.data.norm() <= cfg.tol);
  CHECK(r.final_residual == r.residual_history.back());
  CHECK(static_cast<int>(r.residual_history.size()) == r.iterations);
}

TEST_CASE("residual is bounded by the multiplier box over the penalty") {
  // Every multiplier, the start included, has entries within [-lambda, lambda], so
  // ||D - L - S||_F = ||Y_next - Y||_F / mu <= 2 lambda sqrt(mn) / mu. The residual
  // itself is not monotone: it jumps when an entry crosses the shrinkage threshold.
  for (Index rank : {1, 5}) {
    for (double fraction : {0.01, 0.10}) {
      const auto p = make_rpca_problem(50, rank, fraction, 21);
      RpcaConfig cfg;
      const RpcaResult r = rpca_ialm(p.data, cfg);
      REQUIRE(r.converged);
      const double lambda = default_lambda(50, 50);
      const double d_fro = p.data.norm();
      double mu = 1.25 / spectral_norm(p.data);
      for (double h : r.residual_history) {
        CHECK(h <= 2.0 * lambda * 50.0 / (mu * d_fro) * (1.0 + 1e-9));
        mu *= cfg.rho;
      }
    }
  }
}

TEST_CASE("objective beats the trivial feasible points") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix d = random_matrix(30, 20, rng);
    const double lambda = default_lambda(30, 20);
    const RpcaResult r = rpca_ialm(d);
    const double got = rpca_objective(r.low_rank, r.sparse, lambda);
    CHECK(got <= rpca_objective(d, Matrix::Zero(30, 20), lambda) + 1e-6);
    CHECK(got <= rpca_objective(Matrix::Zero(30, 20), d, lambda) + 1e-6);
  }
}

TEST_CASE("iteration budget exhaustion is reported, not thrown") {
  const auto p = make_rpca_problem(30, 2, 0.05, 8);
  RpcaConfig cfg;
  cfg.max_iters = 3;
  const RpcaResult r = rpca_ialm(p.data, cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 3);
}

TEST_CASE("non-finite input is rejected") {
  Matrix d = Matrix::Ones(4, 4);
  d(2, 2) = std::nan("");
  CHECK_THROWS_AS(rpca_ialm(d), Error);
}

TEST_CASE("explicit lambda and mu0 are honored") {
  const auto p = make_rpca_problem(30, 1, 0.05, 4);
  RpcaConfig cfg;
  cfg.lambda = 1e3;  // l1 term dominates, nothing goes to S
  cfg.mu0 = 0.5;
  const RpcaResult r = rpca_ialm(p.data, cfg);
  CHECK(r.sparse.isZero(0.0));
  CHECK((r.low_rank - p.data).norm() / p.data.norm() < 1e-6);
}
