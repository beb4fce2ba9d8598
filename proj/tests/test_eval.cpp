#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "gassa/datagen.hpp"
#include "gassa/errors.hpp"
#include "gassa/eval.hpp"
#include "gassa/manifold.hpp"
#include "gassa/spd.hpp"

using namespace gassa;
using eval::LabeledCov;
using spd::MetricKind;
using spd::SymPosDef;

namespace {

SymPosDef diag2(double a, double b) {
  Eigen::Matrix2d m = Eigen::Vector2d(a, b).asDiagonal();
  return SymPosDef(m);
}

// A 3x3 example whose compression onto span(e1, e2) is diag(a, b); the third
// eigenvalue is irrelevant to the classifier under that basis.
SymPosDef diag3(double a, double b) {
  Eigen::Matrix3d m = Eigen::Vector3d(a, b, 1.0).asDiagonal();
  return SymPosDef(m);
}

// Coordinate-plane stationary basis: D = 3 ambient, m = 2.
manifold::Subspace plane_basis() {
  return manifold::Subspace::from_span(
      Eigen::MatrixXd::Identity(3, 3).leftCols(2));
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("nspace_error spans the unit interval") {
  datagen::GenScales scales;
  scales.orthogonal_mixing = true;
  datagen::MixingModel model = datagen::make_model(4, 2, 6, 50, 3, scales);

  // Exact recovery scores zero.
  manifold::Subspace truth = datagen::true_n_space(model);
  CHECK(eval::nspace_error(truth, model) <= 1e-12);

  // With a rotation mixing, the complement of the true n-space is the span
  // of the first two mixing columns: every principal angle is pi/2, the
  // worst possible estimate.
  manifold::Subspace worst = manifold::Subspace::from_span(model.a.leftCols(2));
  CHECK(eval::nspace_error(worst, model) == doctest::Approx(1.0).epsilon(1e-10));

  // Raw distance is the normalized one rescaled by sqrt(D - m) * pi/2.
  manifold::Subspace estimate = manifold::random_subspace(4, 2, 9);
  const double scale = std::sqrt(2.0) * M_PI / 2.0;
  CHECK(eval::nspace_error_raw(estimate, model) ==
        doctest::Approx(scale * eval::nspace_error(estimate, model))
            .epsilon(1e-12));

  // Only the span matters: re-orthonormalizing a rotated basis is free.
  Eigen::Matrix2d rot;
  rot << std::cos(0.7), -std::sin(0.7), std::sin(0.7), std::cos(0.7);
  manifold::Subspace rotated =
      manifold::Subspace::from_span(estimate.basis() * rot);
  CHECK(std::abs(eval::nspace_error(rotated, model) -
                 eval::nspace_error(estimate, model)) <= 1e-10);

  CHECK_THROWS_AS(eval::nspace_error(manifold::random_subspace(5, 2, 1), model),
                  BadDimsError);
}

TEST_CASE("mdm_train produces per-class geometric means") {
  manifold::Subspace basis = plane_basis();

  // One example per class: the mean is the compressed example itself.
  std::vector<LabeledCov> singles{{diag3(1, 1), 0}, {diag3(3, 3), 1}};
  eval::MdmModel model = eval::mdm_train(singles, basis, MetricKind::kAirm);
  REQUIRE(model.class_means.size() == 2);
  CHECK((model.class_means.at(0).matrix() - diag2(1, 1).matrix()).norm() <=
        1e-12);
  CHECK((model.class_means.at(1).matrix() - diag2(3, 3).matrix()).norm() <=
        1e-12);

  // Duplicated examples leave the mean unchanged.
  std::vector<LabeledCov> dupes{
      {diag3(2, 5), 0}, {diag3(2, 5), 0}, {diag3(2, 5), 0}, {diag3(9, 9), 1}};
  eval::MdmModel dupe_model = eval::mdm_train(dupes, basis, MetricKind::kStein);
  CHECK((dupe_model.class_means.at(0).matrix() - diag2(2, 5).matrix()).norm() <=
        1e-10);

  // AIRM mean of the compressions {diag(1,4), diag(4,1)} is the closed-form
  // diag(2,2): commuting matrices average eigenvalue-wise geometrically.
  std::vector<LabeledCov> pair{
      {diag3(1, 4), 7}, {diag3(4, 1), 7}, {diag3(1, 1), 8}};
  eval::MdmModel mean_model = eval::mdm_train(pair, basis, MetricKind::kAirm);
  CHECK((mean_model.class_means.at(7).matrix() - diag2(2, 2).matrix()).norm() <=
        1e-8);

  std::vector<LabeledCov> one_class{{diag3(1, 2), 4}, {diag3(2, 1), 4}};
  CHECK_THROWS_AS(eval::mdm_train(one_class, basis, MetricKind::kAirm),
                  EmptyClassError);
  CHECK_THROWS_AS(
      eval::mdm_train(std::vector<LabeledCov>{}, basis, MetricKind::kAirm),
      EmptyClassError);
}

TEST_CASE("mdm_classify picks the nearer mean and breaks ties downward") {
  manifold::Subspace basis = plane_basis();
  std::vector<LabeledCov> train{{diag3(1, 1), 0}, {diag3(3, 3), 1}};

  // Two classes trained on bitwise-identical examples give bitwise-identical
  // means, so every query is an exact tie and must resolve to label 3.
  std::vector<LabeledCov> tied{{diag3(2, 2), 8}, {diag3(2, 2), 3}};

  for (MetricKind metric : {MetricKind::kAirm, MetricKind::kStein}) {
    eval::MdmModel model = eval::mdm_train(train, basis, metric);
    CHECK(eval::mdm_classify(model, diag3(1.1, 1.1)) == 0);
    CHECK(eval::mdm_classify(model, diag3(2.9, 2.9)) == 1);

    eval::MdmModel tie_model = eval::mdm_train(tied, basis, metric);
    REQUIRE(tie_model.class_means.at(3).matrix() ==
            tie_model.class_means.at(8).matrix());
    CHECK(eval::mdm_classify(tie_model, diag3(5, 0.25)) == 3);
  }
}

TEST_CASE("mdm separates classes drawn around distinct anchors") {
  // Two classes of full covariances sharing the true stationary geometry:
  // class k has s-block anchored at (k + 1) * Lambda, plus a common
  // n-block. Noise comes from random congruences close to the identity.
  const int d = 6, m = 3;
  datagen::GenScales scales;
  scales.orthogonal_mixing = true;
  datagen::MixingModel model = datagen::make_model(d, m, 4, 50, 77, scales);
  manifold::Subspace s_basis = datagen::true_s_projection(model);

  auto draw = [&](int label, std::uint64_t seed) {
    SymPosDef s_block = datagen::gen_random_spd(m, seed, 1.0 + 2.0 * label,
                                                1.5 + 2.0 * label);
    SymPosDef n_block = datagen::gen_random_spd(d - m, seed + 7, 0.5, 2.0);
    Eigen::MatrixXd src = Eigen::MatrixXd::Zero(d, d);
    src.topLeftCorner(m, m) = s_block.matrix();
    src.bottomRightCorner(d - m, d - m) = n_block.matrix();
    return LabeledCov{
        SymPosDef(model.a * src * model.a.transpose()), label};
  };

  std::vector<LabeledCov> train, test;
  for (int i = 0; i < 40; ++i) {
    train.push_back(draw(i % 2, 500 + i));
    test.push_back(draw(i % 2, 900 + i));
  }
  for (MetricKind metric : {MetricKind::kAirm, MetricKind::kStein}) {
    eval::MdmModel mdm = eval::mdm_train(train, s_basis, metric);
    int correct = 0;
    for (const auto& example : test)
      correct += eval::mdm_classify(mdm, example.cov) == example.label;
    CHECK(correct >= 36);  // >= 90%
  }
}

TEST_CASE("run_toy_experiment is deterministic and well-formed") {
  eval::ExperimentParams params;
  params.dim = 5;
  params.m = 2;
  params.epochs = 10;
  params.epoch_len = 60;
  params.repeats = 2;
  params.restarts = 2;
  params.seed = 5;
  params.methods = {eval::MethodSpec{eval::MethodSpec::Kind::kGassa,
                                     MetricKind::kAirm, true},
                    eval::MethodSpec{eval::MethodSpec::Kind::kSsa,
                                     MetricKind::kAirm, true}};

  eval::ExperimentReport report = eval::run_toy_experiment(params);
  REQUIRE(report.methods.size() == 2);
  CHECK(report.valid);
  for (const auto& method : report.methods) {
    REQUIRE(method.errors.size() == 2);
    REQUIRE(method.mean.has_value());
    REQUIRE(method.stddev.has_value());
    REQUIRE(method.stderr_mean.has_value());
    CHECK(*method.mean ==
          doctest::Approx(0.5 * (method.errors[0] + method.errors[1]))
              .epsilon(1e-12));
    CHECK(*method.stderr_mean ==
          doctest::Approx(*method.stddev / std::sqrt(2.0)).epsilon(1e-12));
    for (double e : method.errors) {
      CHECK(e >= 0.0);
      CHECK(e <= 1.0);
    }
    CHECK(method.cost_traces.size() == 2);
    CHECK(method.failed_repeats.empty());
    CHECK(method.seconds > 0.0);
  }

  eval::ExperimentReport again = eval::run_toy_experiment(params);
  for (std::size_t k = 0; k < report.methods.size(); ++k) {
    CHECK(again.methods[k].errors == report.methods[k].errors);
    CHECK(again.methods[k].costs == report.methods[k].costs);
  }

  // A single repeat has a mean but no dispersion estimates.
  params.repeats = 1;
  eval::ExperimentReport single = eval::run_toy_experiment(params);
  CHECK(single.methods[0].mean.has_value());
  CHECK(!single.methods[0].stddev.has_value());
  CHECK(!single.methods[0].stderr_mean.has_value());

  params.repeats = 0;
  CHECK_THROWS_AS(eval::run_toy_experiment(params), ConfigError);
}

TEST_CASE("method names follow the reporting convention") {
  auto methods = eval::default_methods();
  REQUIRE(methods.size() == 5);
  std::vector<std::string> names;
  for (const auto& m : methods) names.push_back(m.name());
  CHECK(names[0] == "gassa-airm-w");
  CHECK(names[1] == "gassa-airm-nw");
  CHECK(names[2] == "gassa-stein-w");
  CHECK(names[3] == "gassa-stein-nw");
  CHECK(names[4] == "ssa");
}

TEST_CASE("nw_beats_ssa compares unwhitened means against the baseline") {
  eval::ExperimentReport report;
  auto make = [](eval::MethodSpec spec, double mean) {
    eval::MethodResult r;
    r.spec = spec;
    r.mean = mean;
    return r;
  };
  eval::MethodSpec nw_airm{eval::MethodSpec::Kind::kGassa, MetricKind::kAirm,
                           false};
  eval::MethodSpec nw_stein{eval::MethodSpec::Kind::kGassa, MetricKind::kStein,
                            false};
  eval::MethodSpec ssa_spec{eval::MethodSpec::Kind::kSsa, MetricKind::kAirm,
                            true};

  report.methods = {make(nw_airm, 0.1), make(nw_stein, 0.2),
                    make(ssa_spec, 0.3)};
  CHECK(eval::nw_beats_ssa(report));

  report.methods[1].mean = 0.35;  // one variant above the baseline
  CHECK(!eval::nw_beats_ssa(report));

  report.methods = {make(nw_airm, 0.1)};  // baseline missing
  CHECK(!eval::nw_beats_ssa(report));

  report.methods = {make(nw_airm, 0.1), make(ssa_spec, 0.3)};
  report.methods[0].mean.reset();  // mean missing
  CHECK(!eval::nw_beats_ssa(report));
}

}  // TEST_SUITE("eval")
