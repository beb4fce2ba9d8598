#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "gassa/datagen.hpp"
#include "gassa/errors.hpp"
#include "gassa/random.hpp"
#include "gassa/spd.hpp"

using namespace gassa;
using spd::MetricKind;
using spd::spd_exp;
using spd::spd_log;
using spd::SymPosDef;

namespace {

SymPosDef random_spd(int dim, std::uint64_t seed, double lo = 0.5,
                     double hi = 2.0) {
  return datagen::gen_random_spd(dim, seed, lo, hi);
}

Eigen::MatrixXd diag2(double a, double b) {
  Eigen::Vector2d v(a, b);
  return v.asDiagonal();
}

/// Well-conditioned random invertible matrix: rotation times a diagonal with
/// entries in [0.5, 2].
Eigen::MatrixXd random_invertible(int dim, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(dim, dim, rng));
  Eigen::MatrixXd q = qr.householderQ();
  std::uniform_real_distribution<double> unif(0.5, 2.0);
  Eigen::VectorXd scale(dim);
  for (int i = 0; i < dim; ++i) scale(i) = unif(rng);
  return q * scale.asDiagonal();
}

}  // namespace

TEST_SUITE("spd") {

TEST_CASE("construction validates symmetry and positive definiteness") {
  CHECK_NOTHROW(SymPosDef(random_spd(5, 11).matrix()));

  Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(3, 3);
  asym(0, 1) = 0.5;  // far beyond the relative symmetry tolerance
  CHECK_THROWS_AS(SymPosDef{asym}, NotSpdError);

  CHECK_THROWS_AS(SymPosDef{diag2(1.0, -1.0)}, NotSpdError);
  CHECK_THROWS_AS(SymPosDef{diag2(1.0, 0.0)}, NotSpdError);
  // Relative floor: lambda_min / lambda_max below 1e-12 is rejected.
  CHECK_THROWS_AS(SymPosDef{diag2(1.0, 1e-13)}, NotSpdError);

  Eigen::MatrixXd rect = Eigen::MatrixXd::Ones(2, 3);
  CHECK_THROWS_AS(SymPosDef{rect}, DimMismatchError);

  // Tiny asymmetry within tolerance is scrubbed at construction.
  Eigen::MatrixXd nearly = Eigen::MatrixXd::Identity(3, 3);
  nearly(0, 1) += 5e-12;
  SymPosDef fixed(nearly);
  CHECK(fixed.matrix()(0, 1) == fixed.matrix()(1, 0));

  CHECK(SymPosDef::identity(4).matrix() == Eigen::MatrixXd::Identity(4, 4));
}

TEST_CASE("add_ridge repairs explicitly") {
  SymPosDef repaired = spd::add_ridge(diag2(1.0, 0.0), 1e-3);
  CHECK(repaired.matrix()(1, 1) == doctest::Approx(1e-3));
  CHECK_THROWS_AS(spd::add_ridge(diag2(1.0, 0.0), 0.0), ConfigError);
}

TEST_CASE("spd_log closed forms and round trip") {
  CHECK(spd_log(SymPosDef::identity(3)).norm() == doctest::Approx(0.0));

  const double e = std::exp(1.0);
  Eigen::MatrixXd lg = spd_log(SymPosDef(diag2(e, e * e)));
  CHECK(lg(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lg(1, 1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(lg(0, 1) == doctest::Approx(0.0));

  for (std::uint64_t s = 0; s < 5; ++s) {
    SymPosDef x = random_spd(6, 100 + s, 0.1, 10.0);
    Eigen::MatrixXd lx = spd_log(x);
    CHECK(lx == lx.transpose());  // exactly symmetric by construction
    SymPosDef back = spd_exp(lx);
    CHECK((back.matrix() - x.matrix()).norm() <= 1e-8 * x.matrix().norm());
  }
}

TEST_CASE("spd_exp closed forms and input validation") {
  CHECK(spd_exp(Eigen::MatrixXd::Zero(3, 3)).matrix() ==
        Eigen::MatrixXd::Identity(3, 3));
  SymPosDef ex = spd_exp(diag2(std::log(2.0), std::log(3.0)));
  CHECK(ex.matrix()(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(ex.matrix()(1, 1) == doctest::Approx(3.0).epsilon(1e-14));

  Eigen::MatrixXd asym = Eigen::MatrixXd::Zero(2, 2);
  asym(0, 1) = 1.0;
  CHECK_THROWS_AS(spd_exp(asym), NotSpdError);
}

TEST_CASE("sqrt_and_inv_sqrt closed forms and reconstruction") {
  auto [ri, rii] = sqrt_and_inv_sqrt(SymPosDef::identity(3));
  CHECK((ri.matrix() - Eigen::MatrixXd::Identity(3, 3)).norm() <= 1e-14);
  CHECK((rii.matrix() - Eigen::MatrixXd::Identity(3, 3)).norm() <= 1e-14);

  auto [half, inv_half] = sqrt_and_inv_sqrt(SymPosDef(diag2(4.0, 9.0)));
  CHECK((half.matrix() - diag2(2.0, 3.0)).norm() <= 1e-12);
  CHECK((inv_half.matrix() - diag2(0.5, 1.0 / 3.0)).norm() <= 1e-12);

  SymPosDef x = random_spd(7, 21, 0.2, 5.0);
  auto [h, ih] = sqrt_and_inv_sqrt(x);
  CHECK((h.matrix() * h.matrix() - x.matrix()).norm() <=
        1e-8 * x.matrix().norm());
  CHECK((h.matrix() * ih.matrix() - Eigen::MatrixXd::Identity(7, 7)).norm() <=
        1e-8);
}

TEST_CASE("airm_dist2 closed forms") {
  SymPosDef i2 = SymPosDef::identity(2);
  CHECK(spd::airm_dist2(i2, i2) == doctest::Approx(0.0));

  const double e2 = std::exp(2.0);
  // Commuting diagonal case: sum of squared log eigenvalue ratios.
  CHECK(spd::airm_dist2(i2, SymPosDef(diag2(e2, e2))) ==
        doctest::Approx(8.0).epsilon(1e-10));

  SymPosDef x = random_spd(4, 31), y = random_spd(4, 32);
  CHECK(spd::airm_dist2(x, y) == doctest::Approx(spd::airm_dist2(y, x)));
  CHECK_THROWS_AS(spd::airm_dist2(x, random_spd(5, 33)), DimMismatchError);
}

TEST_CASE("stein_div closed forms and overflow safety") {
  SymPosDef i2 = SymPosDef::identity(2);
  CHECK(spd::stein_div(i2, i2) == doctest::Approx(0.0));
  CHECK(spd::stein_div(i2, SymPosDef(3.0 * Eigen::MatrixXd::Identity(2, 2))) ==
        doctest::Approx(std::log(4.0 / 3.0)).epsilon(1e-12));

  // Raw determinants of these would overflow a double; log-dets must not.
  SymPosDef big1(1e20 * Eigen::MatrixXd::Identity(20, 20));
  SymPosDef big2(2e20 * Eigen::MatrixXd::Identity(20, 20));
  const double expected = 20.0 * std::log(1.5 / std::sqrt(2.0));
  CHECK(spd::stein_div(big1, big2) == doctest::Approx(expected).epsilon(1e-10));

  SymPosDef x = random_spd(4, 41), y = random_spd(4, 42);
  CHECK(spd::stein_div(x, y) == doctest::Approx(spd::stein_div(y, x)));
}

TEST_CASE("congruence invariance of both metrics") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    SymPosDef x = random_spd(5, 500 + s, 0.2, 5.0);
    SymPosDef y = random_spd(5, 600 + s, 0.2, 5.0);
    Eigen::MatrixXd p = random_invertible(5, 700 + s);
    SymPosDef xp = spd::congruence(p, x);
    SymPosDef yp = spd::congruence(p, y);
    const double a0 = spd::airm_dist2(x, y), a1 = spd::airm_dist2(xp, yp);
    const double s0 = spd::stein_div(x, y), s1 = spd::stein_div(xp, yp);
    CHECK(std::abs(a1 - a0) <= 1e-8 * std::max(1.0, a0));
    CHECK(std::abs(s1 - s0) <= 1e-8 * std::max(1.0, s0));
  }
}

TEST_CASE("congruence basics and conditioning guard") {
  SymPosDef x = random_spd(3, 55);
  CHECK((spd::congruence(Eigen::MatrixXd::Identity(3, 3), x).matrix() -
         x.matrix())
            .norm() <= 1e-14);

  Eigen::MatrixXd ill = diag2(1.0, 1e-13);  // condition number 1e13
  CHECK_THROWS_AS(spd::congruence(ill, random_spd(2, 56)),
                  SingularTransformError);
}

TEST_CASE("metric axioms on random triples") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    SymPosDef x = random_spd(5, 1000 + s, 0.2, 5.0);
    SymPosDef y = random_spd(5, 2000 + s, 0.2, 5.0);
    SymPosDef z = random_spd(5, 3000 + s, 0.2, 5.0);
    for (MetricKind metric : {MetricKind::kAirm, MetricKind::kStein}) {
      const double dxy = spd::dist2(metric, x, y);
      CHECK(std::abs(dxy - spd::dist2(metric, y, x)) <= 1e-10 * (1.0 + dxy));
      CHECK(spd::dist2(metric, x, x) <= 1e-10);
      const double txy = std::sqrt(dxy);
      const double tyz = std::sqrt(spd::dist2(metric, y, z));
      const double txz = std::sqrt(spd::dist2(metric, x, z));
      CHECK(txz <= txy + tyz + 1e-9);
    }
  }
}

TEST_CASE("stein tracks airm ordering near the identity") {
  // Rank correlation of the two distances over random near-identity pairs.
  const int n = 200;
  std::vector<double> airm(n), stein(n);
  Rng rng(99);
  std::uniform_real_distribution<double> unif(0.02, 0.1);
  auto near_identity = [&]() {
    Eigen::MatrixXd g = gaussian_matrix(4, 4, rng);
    Eigen::MatrixXd e = 0.5 * (g + g.transpose());
    e *= unif(rng) / e.norm();
    return SymPosDef(Eigen::MatrixXd(Eigen::MatrixXd::Identity(4, 4) + e));
  };
  for (int i = 0; i < n; ++i) {
    SymPosDef x = near_identity(), y = near_identity();
    airm[i] = spd::airm_dist2(x, y);
    stein[i] = spd::stein_div(x, y);
  }
  auto ranks = [n](const std::vector<double>& v) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    for (int i = 0; i < n; ++i) r[idx[i]] = i;
    return r;
  };
  std::vector<double> ra = ranks(airm), rs = ranks(stein);
  double num = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = ra[i] - rs[i];
    num += d * d;
  }
  const double spearman = 1.0 - 6.0 * num / (double(n) * (n * n - 1.0));
  CHECK(spearman >= 0.99);
}

TEST_CASE("karcher_mean closed forms") {
  SymPosDef x = random_spd(4, 71);
  std::vector<SymPosDef> same{x, x, x};
  SymPosDef m = spd::karcher_mean(same);
  CHECK((m.matrix() - x.matrix()).norm() <= 1e-10 * x.matrix().norm());

  // Two-matrix mean is the geodesic midpoint; commuting diagonals by hand.
  std::vector<SymPosDef> pair{SymPosDef(diag2(1.0, 4.0)),
                              SymPosDef(diag2(4.0, 1.0))};
  SymPosDef mid = spd::karcher_mean(pair);
  CHECK((mid.matrix() - diag2(2.0, 2.0)).norm() <= 1e-8);
}

TEST_CASE("karcher_mean equivariance and fixed point") {
  // Congruence equivariance: mean({A L_i A^T}) = A mean({L_i}) A^T.
  std::vector<SymPosDef> lambdas;
  for (std::uint64_t s = 0; s < 6; ++s)
    lambdas.push_back(random_spd(5, 800 + s, 0.3, 3.0));
  Eigen::MatrixXd a = random_invertible(5, 99);
  std::vector<SymPosDef> mixed;
  for (const auto& l : lambdas) mixed.push_back(spd::congruence(a, l));
  // congruence() applies P^T X P; match that orientation on the mean.
  SymPosDef lhs = spd::karcher_mean(mixed);
  SymPosDef rhs = spd::congruence(a, spd::karcher_mean(lambdas));
  CHECK((lhs.matrix() - rhs.matrix()).norm() <=
        1e-5 * rhs.matrix().norm());

  // Fixed-point residual of the returned mean, recomputed from scratch.
  SymPosDef mean = spd::karcher_mean(lambdas);
  auto [half, inv_half] = sqrt_and_inv_sqrt(mean);
  Eigen::MatrixXd log_sum = Eigen::MatrixXd::Zero(5, 5);
  for (const auto& l : lambdas)
    log_sum += spd_log(SymPosDef(
        Eigen::MatrixXd(inv_half.matrix() * l.matrix() * inv_half.matrix())));
  CHECK(log_sum.norm() <= 1e-10 * lambdas.size());
}

TEST_CASE("karcher_mean reports non-convergence") {
  std::vector<SymPosDef> pair{SymPosDef(diag2(1.0, 4.0)),
                              SymPosDef(diag2(4.0, 1.0))};
  spd::MeanOptions strict{1e-15, 1};
  CHECK_THROWS_AS(spd::karcher_mean(pair, strict), NoConvergenceError);
}

TEST_CASE("stein_mean trivial cases and minimality") {
  SymPosDef x = random_spd(3, 81);
  CHECK((spd::stein_mean(std::vector<SymPosDef>{x}).matrix() - x.matrix())
            .norm() == 0.0);
  CHECK((spd::stein_mean(std::vector<SymPosDef>{x, x}).matrix() - x.matrix())
            .norm() <= 1e-10 * x.matrix().norm());

  std::vector<SymPosDef> pair{SymPosDef(diag2(1.0, 4.0)),
                              SymPosDef(diag2(4.0, 1.0))};
  SymPosDef m = spd::stein_mean(pair);
  double at_mean = 0.0;
  for (const auto& s : pair) at_mean += spd::stein_div(s, m);
  Rng rng(7);
  std::uniform_real_distribution<double> unif(0.25, 8.0);
  for (int c = 0; c < 1000; ++c) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(2, 2, rng));
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd cand =
        q * diag2(unif(rng), unif(rng)) * q.transpose();
    SymPosDef candidate(Eigen::MatrixXd(0.5 * (cand + cand.transpose())));
    double at_candidate = 0.0;
    for (const auto& s : pair) at_candidate += spd::stein_div(s, candidate);
    CHECK(at_mean <= at_candidate + 1e-12);
  }
}

TEST_CASE("mean dispatches on the metric") {
  std::vector<SymPosDef> set;
  for (std::uint64_t s = 0; s < 4; ++s) set.push_back(random_spd(4, 900 + s));
  CHECK((spd::mean(MetricKind::kAirm, set).matrix() -
         spd::karcher_mean(set).matrix())
            .norm() == 0.0);
  CHECK((spd::mean(MetricKind::kStein, set).matrix() -
         spd::stein_mean(set).matrix())
            .norm() == 0.0);
}

TEST_CASE("whiten_set maps the mean to the identity") {
  SymPosDef i3 = SymPosDef::identity(3);
  auto [trivial, ctx0] =
      spd::whiten_set(std::vector<SymPosDef>{i3, i3}, MetricKind::kAirm);
  CHECK((ctx0.whitener - Eigen::MatrixXd::Identity(3, 3)).norm() <= 1e-10);
  for (const auto& w : trivial)
    CHECK((w.matrix() - Eigen::MatrixXd::Identity(3, 3)).norm() <= 1e-10);

  SymPosDef x = random_spd(4, 19);
  auto [single, ctx1] =
      spd::whiten_set(std::vector<SymPosDef>{x}, MetricKind::kAirm);
  CHECK((single[0].matrix() - Eigen::MatrixXd::Identity(4, 4)).norm() <= 1e-8);
  auto [half, inv_half] = sqrt_and_inv_sqrt(x);
  CHECK((ctx1.whitener - inv_half.matrix()).norm() <= 1e-10);

  for (MetricKind metric : {MetricKind::kAirm, MetricKind::kStein}) {
    std::vector<SymPosDef> set;
    for (std::uint64_t s = 0; s < 8; ++s)
      set.push_back(random_spd(5, 400 + s, 0.3, 3.0));
    auto [whitened, ctx] = spd::whiten_set(set, metric);
    CHECK(ctx.metric == metric);
    // The whitening context satisfies Z mean Z = I.
    CHECK((ctx.whitener * ctx.mean.matrix() * ctx.whitener -
           Eigen::MatrixXd::Identity(5, 5))
              .norm() <= 1e-8);
    // Whitened distances to I equal original distances to the mean.
    SymPosDef identity = SymPosDef::identity(5);
    for (std::size_t i = 0; i < set.size(); ++i) {
      const double original = spd::dist2(metric, set[i], ctx.mean);
      const double white = spd::dist2(metric, whitened[i], identity);
      CHECK(std::abs(white - original) <= 1e-6 * std::max(1.0, original));
    }
    // And the whitened set's own metric mean is the identity.
    SymPosDef remean = spd::mean(metric, whitened);
    CHECK((remean.matrix() - Eigen::MatrixXd::Identity(5, 5)).norm() <= 1e-5);
  }
}

}  // TEST_SUITE("spd")
