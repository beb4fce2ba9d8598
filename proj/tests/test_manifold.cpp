#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "doctest.h"
#include "gassa/errors.hpp"
#include "gassa/manifold.hpp"
#include "gassa/random.hpp"

using namespace gassa;
using manifold::Subspace;

namespace {

Eigen::MatrixXd random_orthogonal(int dim, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(dim, dim, rng));
  return qr.householderQ();
}

/// Planted quadratic -tr(Q^T M Q): minimized by the span of M's top-m
/// eigenvectors. M is diagonal so the optimum is a coordinate span.
struct PlantedQuadratic {
  Eigen::VectorXd diag;

  double cost(const Eigen::MatrixXd& q) const {
    return -(q.transpose() * diag.asDiagonal() * q).trace();
  }
  Eigen::MatrixXd egrad(const Eigen::MatrixXd& q) const {
    return -2.0 * (diag.asDiagonal() * q);
  }
};

}  // namespace

TEST_SUITE("manifold") {

TEST_CASE("subspace construction validates") {
  Eigen::MatrixXd good = Eigen::MatrixXd::Identity(4, 2);
  CHECK_NOTHROW(Subspace{good});

  Eigen::MatrixXd skew = good;
  skew(0, 1) = 0.3;  // columns no longer orthonormal
  CHECK_THROWS_AS(Subspace{skew}, RankDeficientError);

  CHECK_THROWS_AS(Subspace{Eigen::MatrixXd::Identity(3, 3)}, BadDimsError);
  CHECK_THROWS_AS(Subspace{Eigen::MatrixXd(3, 0)}, BadDimsError);

  Subspace from = Subspace::from_span(skew);  // full rank, just not orthonormal
  CHECK((from.basis().transpose() * from.basis() -
         Eigen::MatrixXd::Identity(2, 2))
            .norm() <= 1e-12);

  Eigen::MatrixXd dependent(3, 2);
  dependent << 1, 2, 1, 2, 1, 2;
  CHECK_THROWS_AS(Subspace::from_span(dependent), RankDeficientError);
}

TEST_CASE("random_subspace is deterministic, orthonormal, and uniform") {
  Subspace a = manifold::random_subspace(3, 2, 42);
  Subspace b = manifold::random_subspace(3, 2, 42);
  CHECK(a.basis() == b.basis());
  CHECK((a.basis().transpose() * a.basis() - Eigen::MatrixXd::Identity(2, 2))
            .norm() <= 1e-12);
  CHECK_THROWS_AS(manifold::random_subspace(3, 3, 0), BadDimsError);

  // Mean distance to a fixed subspace agrees with sampling the full
  // orthogonal group and truncating (exactly rotation-invariant by
  // construction), within Monte-Carlo error.
  const int dim = 6, m = 2, draws = 1000;
  Subspace fixed = manifold::random_subspace(dim, m, 7);
  double mine = 0.0, reference = 0.0;
  for (int i = 0; i < draws; ++i) {
    mine += grassmann_dist(manifold::random_subspace(dim, m, 1000 + i), fixed);
    Eigen::MatrixXd q = random_orthogonal(dim, 5000 + i);
    reference += grassmann_dist(
        manifold::unchecked_subspace(q.leftCols(m)), fixed);
  }
  mine /= draws;
  reference /= draws;
  CHECK(std::abs(mine - reference) <= 0.05 * reference);
}

TEST_CASE("project_tangent produces horizontal vectors") {
  Subspace q = manifold::random_subspace(5, 2, 3);
  CHECK(manifold::project_tangent(q, q.basis()).norm() <= 1e-14);

  Rng rng(4);
  Eigen::MatrixXd g = gaussian_matrix(5, 2, rng);
  Eigen::MatrixXd once = manifold::project_tangent(q, g);
  CHECK((q.basis().transpose() * once).norm() <= 1e-12);
  Eigen::MatrixXd twice = manifold::project_tangent(q, once);
  CHECK((twice - once).norm() <= 1e-12 * std::max(1.0, once.norm()));

  // A vector already horizontal passes through unchanged.
  CHECK((manifold::project_tangent(q, once) - once).norm() <=
        1e-12 * std::max(1.0, once.norm()));
}

TEST_CASE("retract stays on the manifold and is first order") {
  Subspace q = manifold::random_subspace(6, 3, 11);
  Subspace same = manifold::retract(q, Eigen::MatrixXd::Zero(6, 3));
  // Principal angles near zero are computed through arccos, whose noise
  // floor for coinciding spans is about sqrt(machine epsilon).
  CHECK(grassmann_dist(same, q) <= 1e-7);

  Rng rng(12);
  Eigen::MatrixXd direction =
      manifold::project_tangent(q, gaussian_matrix(6, 3, rng));
  direction /= direction.norm();
  for (double step : {1e-2, 1e-3}) {
    Subspace moved = manifold::retract(q, step * direction);
    CHECK((moved.basis().transpose() * moved.basis() -
           Eigen::MatrixXd::Identity(3, 3))
              .norm() <= 1e-10);
    // Distance matches the tangent norm to third order in the step. The
    // cubic term dominates the arccos conditioning floor at these steps.
    CHECK(std::abs(grassmann_dist(moved, q) - step) <=
          2.0 * step * step * step);
  }
}

TEST_CASE("grassmann_dist closed forms and axioms") {
  Subspace q = manifold::random_subspace(5, 2, 21);
  CHECK(grassmann_dist(q, q) == doctest::Approx(0.0));

  Eigen::MatrixXd e1(2, 1), e2(2, 1);
  e1 << 1, 0;
  e2 << 0, 1;
  CHECK(grassmann_dist(Subspace(e1), Subspace(e2)) ==
        doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));

  // Invariance under right-rotation of either basis.
  Subspace p = manifold::random_subspace(5, 2, 22);
  Eigen::MatrixXd r1 = random_orthogonal(2, 23);
  Eigen::MatrixXd r2 = random_orthogonal(2, 24);
  Subspace qr = manifold::unchecked_subspace(q.basis() * r1);
  Subspace pr = manifold::unchecked_subspace(p.basis() * r2);
  CHECK(std::abs(grassmann_dist(qr, pr) - grassmann_dist(q, p)) <= 1e-10);

  for (std::uint64_t s = 0; s < 50; ++s) {
    Subspace x = manifold::random_subspace(5, 2, 100 + s);
    Subspace y = manifold::random_subspace(5, 2, 200 + s);
    Subspace z = manifold::random_subspace(5, 2, 300 + s);
    CHECK(std::abs(grassmann_dist(x, y) - grassmann_dist(y, x)) <= 1e-12);
    CHECK(grassmann_dist(x, z) <=
          grassmann_dist(x, y) + grassmann_dist(y, z) + 1e-9);
  }

  CHECK_THROWS_AS(
      grassmann_dist(q, manifold::random_subspace(5, 3, 1)), DimMismatchError);
}

TEST_CASE("complement spans the orthogonal space") {
  Subspace q = manifold::random_subspace(7, 3, 31);
  Subspace c = manifold::complement(q);
  CHECK(c.ambient_dim() == 7);
  CHECK(c.sub_dim() == 4);
  CHECK((q.basis().transpose() * c.basis()).norm() <= 1e-12);
}

TEST_CASE("minimize stops immediately at a critical point") {
  // cost(Q) = ||Q^T Q - I||^2 = 0 identically on the manifold; the gradient
  // vanishes at the start so no iterations are spent.
  auto cost = [](const Eigen::MatrixXd& q) {
    return (q.transpose() * q - Eigen::MatrixXd::Identity(q.cols(), q.cols()))
        .squaredNorm();
  };
  auto egrad = [](const Eigen::MatrixXd& q) {
    return Eigen::MatrixXd(
        4.0 * q *
        (q.transpose() * q - Eigen::MatrixXd::Identity(q.cols(), q.cols())));
  };
  Subspace q0 = manifold::random_subspace(5, 2, 41);
  manifold::MinimizeResult run = manifold::minimize(cost, egrad, q0);
  CHECK(run.stats.iterations == 0);
  CHECK(run.stats.converged);
  CHECK(run.cost == doctest::Approx(0.0));
}

TEST_CASE("minimize solves the planted quadratic") {
  PlantedQuadratic problem;
  problem.diag = Eigen::VectorXd::LinSpaced(8, 10.0, 3.0);  // 10, 9, ..., 3
  auto cost = [&](const Eigen::MatrixXd& q) { return problem.cost(q); };
  auto egrad = [&](const Eigen::MatrixXd& q) { return problem.egrad(q); };

  Subspace q0 = manifold::random_subspace(8, 3, 51);
  manifold::MinimizeResult run = manifold::minimize(cost, egrad, q0);
  CHECK(run.stats.converged);
  CHECK(run.stats.final_grad_norm <= 1e-6);
  CHECK(run.cost <= problem.cost(q0.basis()) + 1e-12);

  Subspace top = manifold::unchecked_subspace(
      Eigen::MatrixXd::Identity(8, 3));  // top-3 eigenvector span
  CHECK(grassmann_dist(run.point, top) <= 1e-4);

  // Accepted cost sequence is monotone non-increasing.
  for (std::size_t i = 1; i < run.stats.cost_trace.size(); ++i)
    CHECK(run.stats.cost_trace[i] <= run.stats.cost_trace[i - 1] + 1e-12);

  // The endpoint depends only on span(Q0).
  Eigen::MatrixXd r = random_orthogonal(3, 52);
  Subspace q0r = manifold::unchecked_subspace(q0.basis() * r);
  manifold::MinimizeResult rerun = manifold::minimize(cost, egrad, q0r);
  CHECK(grassmann_dist(rerun.point, run.point) <= 1e-4);
}

TEST_CASE("minimize converges on a battery of random quadratics") {
  int converged = 0;
  const int problems = 100;
  for (int i = 0; i < problems; ++i) {
    Rng rng(7000 + i);
    Eigen::MatrixXd g = gaussian_matrix(6, 6, rng);
    Eigen::MatrixXd msym = 0.5 * (g + g.transpose());
    auto cost = [&](const Eigen::MatrixXd& q) {
      return -(q.transpose() * msym * q).trace();
    };
    auto egrad = [&](const Eigen::MatrixXd& q) {
      return Eigen::MatrixXd(-2.0 * msym * q);
    };
    Subspace q0 = manifold::random_subspace(6, 2, 7100 + i);
    manifold::MinimizeResult run = manifold::minimize(cost, egrad, q0);
    CHECK(run.cost <= cost(q0.basis()) + 1e-12);
    if (run.stats.final_grad_norm <= 1e-6) ++converged;
  }
  CHECK(converged >= 95);
}

TEST_CASE("minimize reports an exhausted iteration budget") {
  PlantedQuadratic problem;
  problem.diag = Eigen::VectorXd::LinSpaced(8, 10.0, 3.0);
  manifold::OptimizerOptions tight;
  tight.max_iter = 1;
  manifold::MinimizeResult run = manifold::minimize(
      [&](const Eigen::MatrixXd& q) { return problem.cost(q); },
      [&](const Eigen::MatrixXd& q) { return problem.egrad(q); },
      manifold::random_subspace(8, 3, 61), tight);
  CHECK_FALSE(run.stats.converged);
  CHECK(run.stats.flag == "max_iter");
  CHECK(run.stats.iterations == 1);
}

}  // TEST_SUITE("manifold")
