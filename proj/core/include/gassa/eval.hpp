#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gassa/datagen.hpp"
#include "gassa/gassa.hpp"
#include "gassa/manifold.hpp"
#include "gassa/spd.hpp"
#include "gassa/ssa.hpp"

namespace gassa::eval {

/// Grassmann distance between the estimated non-stationary span and the
/// model's true one (the last D - m columns of the mixing transformation),
/// normalized by the maximal possible distance sqrt(D - m) * pi/2 so the
/// result lies in [0, 1] and is comparable across (D, m).
double nspace_error(const manifold::Subspace& estimated,
                    const datagen::MixingModel& model);

/// The same error without normalization (the plain Grassmann distance).
double nspace_error_raw(const manifold::Subspace& estimated,
                        const datagen::MixingModel& model);

/// A covariance matrix with a class label.
struct LabeledCov {
  spd::SymPosDef cov;
  int label = 0;
};

/// Minimum-distance-to-mean classifier state: per-class means of the
/// s-space compressions, in the chosen geometry.
struct MdmModel {
  std::map<int, spd::SymPosDef> class_means;  // label -> m x m mean
  spd::MetricKind metric = spd::MetricKind::kAirm;
  manifold::Subspace s_basis;
};

/// Trains the MDM classifier: compresses every covariance onto the
/// stationary subspace and takes the metric-matched mean per class.
/// Requires at least two distinct labels.
MdmModel mdm_train(std::span<const LabeledCov> examples,
                   const manifold::Subspace& s_basis, spd::MetricKind metric);

/// Assigns the class whose mean is closest (in the model's geometry) to the
/// compression of the input; exact ties break toward the lower label.
int mdm_classify(const MdmModel& model, const spd::SymPosDef& cov);

/// One method entry of the toy benchmark.
struct MethodSpec {
  enum class Kind { kGassa, kSsa };
  Kind kind = Kind::kGassa;
  spd::MetricKind metric = spd::MetricKind::kAirm;  // ignored for SSA
  bool whiten = true;                                // ignored for SSA
  std::string name() const;
};

/// The five benchmark methods: gaSSA {AIRM, Stein} x {whitened, not}, SSA.
std::vector<MethodSpec> default_methods();

/// Parameters of the toy benchmark experiment.
struct ExperimentParams {
  int dim = 19;
  int m = 12;
  int epochs = 50;      // N
  int epoch_len = 250;  // T
  int repeats = 25;
  std::vector<MethodSpec> methods = default_methods();
  std::uint64_t seed = 0;
  datagen::GenScales scales{};
  ssa::CovEstimator estimator{};
  int restarts = 5;
  manifold::OptimizerOptions optimizer{};
  int threads = 1;  // repeat-level parallelism; fits run single-threaded
};

/// Per-method outcome: per-repeat errors (normalized and raw), failures,
/// and aggregates. `stddev` is the sample standard deviation, reported only
/// when at least two repeats succeeded; `stderr_mean` is stddev / sqrt(n).
struct MethodResult {
  MethodSpec spec;
  std::vector<double> errors;      // normalized n-space errors, by repeat
  std::vector<double> raw_errors;  // unnormalized Grassmann distances
  std::vector<double> costs;       // winning restart's final cost, by repeat
  std::vector<std::vector<double>> cost_traces;  // winning restart's trace
  std::vector<int> failed_repeats;
  std::vector<std::string> failure_messages;
  double seconds = 0.0;  // accumulated fit wall time
  std::optional<double> mean;
  std::optional<double> stddev;
  std::optional<double> stderr_mean;
};

/// Full benchmark report. `valid` is false when any method failed on more
/// than 20% of the repeats.
struct ExperimentReport {
  ExperimentParams params;
  std::vector<MethodResult> methods;
  bool valid = true;
};

/// Runs the toy benchmark: per repeat, draws a fresh model (seed derived
/// from params.seed by repeat index), generates signals, estimates epoch
/// statistics once, fits every method on them, and records n-space errors.
/// Failed fits are excluded from aggregates and counted. Deterministic for
/// fixed params regardless of thread count.
ExperimentReport run_toy_experiment(const ExperimentParams& params);

/// The --assert-ordering predicate: every gaSSA unwhitened variant present
/// in the report has a mean error strictly below SSA's. False when the
/// comparison cannot be made (missing methods or means).
bool nw_beats_ssa(const ExperimentReport& report);

}  // namespace gassa::eval
