#include "gassa/eval.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gassa/parallel.hpp"
#include "gassa/random.hpp"

namespace gassa::eval {

namespace {

using spd::MetricKind;
using spd::SymPosDef;

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

double nspace_error_raw(const manifold::Subspace& estimated,
                        const datagen::MixingModel& model) {
  const int n_dim = model.ambient_dim() - model.s_dim();
  if (estimated.ambient_dim() != model.ambient_dim() ||
      estimated.sub_dim() != n_dim) {
    std::ostringstream msg;
    msg << "estimated n-space must be " << model.ambient_dim() << "x" << n_dim
        << ", got " << estimated.ambient_dim() << "x" << estimated.sub_dim();
    throw BadDimsError(msg.str());
  }
  return manifold::grassmann_dist(estimated, datagen::true_n_space(model));
}

double nspace_error(const manifold::Subspace& estimated,
                    const datagen::MixingModel& model) {
  const int n_dim = model.ambient_dim() - model.s_dim();
  const double max_dist =
      std::sqrt(static_cast<double>(n_dim)) * std::numbers::pi / 2.0;
  return nspace_error_raw(estimated, model) / max_dist;
}

MdmModel mdm_train(std::span<const LabeledCov> examples,
                   const manifold::Subspace& s_basis, MetricKind metric) {
  if (examples.empty()) throw EmptyClassError("no training examples");
  std::map<int, std::vector<SymPosDef>> groups;
  for (const auto& ex : examples)
    groups[ex.label].push_back(project_to_s_space(s_basis, ex.cov));
  if (groups.size() < 2)
    throw EmptyClassError("need at least two non-empty classes");
  std::map<int, SymPosDef> means;
  for (const auto& [label, compressed] : groups)
    means.emplace(label, spd::mean(metric, compressed));
  return MdmModel{std::move(means), metric, s_basis};
}

int mdm_classify(const MdmModel& model, const SymPosDef& cov) {
  if (model.class_means.size() < 2)
    throw EmptyClassError("classifier has fewer than two classes");
  SymPosDef compressed = project_to_s_space(model.s_basis, cov);
  bool first = true;
  int best_label = 0;
  double best_dist = 0.0;
  for (const auto& [label, mean] : model.class_means) {
    const double dist = spd::dist2(model.metric, compressed, mean);
    if (first || dist < best_dist) {  // map order: ties keep the lower label
      best_label = label;
      best_dist = dist;
      first = false;
    }
  }
  return best_label;
}

std::string MethodSpec::name() const {
  if (kind == Kind::kSsa) return "ssa";
  std::string name = "gassa-";
  name += metric == MetricKind::kAirm ? "airm" : "stein";
  name += whiten ? "-w" : "-nw";
  return name;
}

std::vector<MethodSpec> default_methods() {
  return {
      MethodSpec{MethodSpec::Kind::kGassa, MetricKind::kAirm, true},
      MethodSpec{MethodSpec::Kind::kGassa, MetricKind::kAirm, false},
      MethodSpec{MethodSpec::Kind::kGassa, MetricKind::kStein, true},
      MethodSpec{MethodSpec::Kind::kGassa, MetricKind::kStein, false},
      MethodSpec{MethodSpec::Kind::kSsa},
  };
}

namespace {

struct MethodOutcome {
  double error = 0.0;      // normalized
  double raw_error = 0.0;  // plain Grassmann distance
  double cost = 0.0;
  std::vector<double> cost_trace;
};

struct RepeatOutcome {
  // Parallel to params.methods: outcome when the fit succeeded,
  // message when it failed.
  std::vector<std::optional<MethodOutcome>> results;
  std::vector<std::string> messages;
  std::vector<double> seconds;
};

RepeatOutcome run_one_repeat(const ExperimentParams& params, int repeat) {
  const std::uint64_t repeat_seed = derive_seed(params.seed, repeat);
  const std::uint64_t fit_seed = derive_seed(repeat_seed, 1);
  const int n_methods = static_cast<int>(params.methods.size());
  RepeatOutcome outcome;
  outcome.results.resize(n_methods);
  outcome.messages.resize(n_methods);
  outcome.seconds.assign(n_methods, 0.0);

  datagen::MixingModel model;
  std::vector<ssa::EpochStats> stats;
  std::vector<SymPosDef> covs;
  try {
    model = datagen::make_model(params.dim, params.m, params.epochs,
                                params.epoch_len, repeat_seed, params.scales);
    datagen::SignalSet signals = datagen::gen_signals(model);
    auto segments =
        datagen::split_epochs(signals.samples, params.epoch_len, 0.0);
    stats.reserve(segments.size());
    covs.reserve(segments.size());
    for (std::size_t i = 0; i < segments.size(); ++i) {
      stats.push_back(ssa::epoch_stats(segments[i], params.estimator,
                                       static_cast<int>(i)));
      covs.push_back(stats.back().cov);
    }
  } catch (const Error& e) {
    for (int k = 0; k < n_methods; ++k)
      outcome.messages[k] = e.category() + ": " + e.what();
    return outcome;
  }

  for (int k = 0; k < n_methods; ++k) {
    const MethodSpec& spec = params.methods[k];
    const auto start = std::chrono::steady_clock::now();
    try {
      if (spec.kind == MethodSpec::Kind::kGassa) {
        GassaConfig config;
        config.m = params.m;
        config.metric = spec.metric;
        config.whiten = spec.whiten;
        config.restarts = params.restarts;
        config.seed = fit_seed;
        config.optimizer = params.optimizer;
        config.threads = 1;
        GassaResult result = fit(covs, config);
        MethodOutcome mo{nspace_error(result.n_basis, model),
                         nspace_error_raw(result.n_basis, model), result.cost,
                         {}};
        if (result.best_restart >= 0)
          mo.cost_trace = result.restarts[result.best_restart].cost_trace;
        outcome.results[k] = std::move(mo);
      } else {
        ssa::SsaConfig config;
        config.m = params.m;
        config.restarts = params.restarts;
        config.seed = fit_seed;
        config.optimizer = params.optimizer;
        config.threads = 1;
        ssa::SsaResult result = ssa::fit_ssa(stats, config);
        MethodOutcome mo{nspace_error(result.n_basis, model),
                         nspace_error_raw(result.n_basis, model), result.cost,
                         {}};
        if (result.best_restart >= 0)
          mo.cost_trace = result.restarts[result.best_restart].cost_trace;
        outcome.results[k] = std::move(mo);
      }
    } catch (const Error& e) {
      outcome.messages[k] = e.category() + ": " + e.what();
    }
    outcome.seconds[k] = elapsed_seconds(start);
  }
  return outcome;
}

}  // namespace

ExperimentReport run_toy_experiment(const ExperimentParams& params) {
  if (params.repeats < 1) throw ConfigError("repeats must be at least 1");
  if (params.dim < 2 || params.m < 1 || params.m >= params.dim)
    throw BadDimsError("experiment needs D >= 2 and 0 < m < D");
  ExperimentReport report;
  report.params = params;
  if (params.methods.empty()) return report;

  std::vector<RepeatOutcome> outcomes(params.repeats);
  parallel_for(params.repeats, params.threads,
               [&](int r) { outcomes[r] = run_one_repeat(params, r); });

  const int n_methods = static_cast<int>(params.methods.size());
  report.methods.resize(n_methods);
  for (int k = 0; k < n_methods; ++k) {
    MethodResult& mr = report.methods[k];
    mr.spec = params.methods[k];
    for (int r = 0; r < params.repeats; ++r) {
      const RepeatOutcome& oc = outcomes[r];
      mr.seconds += oc.seconds[k];
      if (oc.results[k]) {
        mr.errors.push_back(oc.results[k]->error);
        mr.raw_errors.push_back(oc.results[k]->raw_error);
        mr.costs.push_back(oc.results[k]->cost);
        mr.cost_traces.push_back(oc.results[k]->cost_trace);
      } else {
        mr.failed_repeats.push_back(r);
        mr.failure_messages.push_back(oc.messages[k]);
      }
    }
    const int n = static_cast<int>(mr.errors.size());
    if (n >= 1) {
      double sum = 0.0;
      for (double e : mr.errors) sum += e;
      mr.mean = sum / n;
      if (n >= 2) {
        double ss = 0.0;
        for (double e : mr.errors) ss += (e - *mr.mean) * (e - *mr.mean);
        mr.stddev = std::sqrt(ss / (n - 1));
        mr.stderr_mean = *mr.stddev / std::sqrt(static_cast<double>(n));
      }
    }
    if (mr.failed_repeats.size() * 5 > static_cast<std::size_t>(params.repeats))
      report.valid = false;  // more than 20% failures
  }
  return report;
}

bool nw_beats_ssa(const ExperimentReport& report) {
  std::optional<double> ssa_mean;
  for (const auto& mr : report.methods)
    if (mr.spec.kind == MethodSpec::Kind::kSsa) ssa_mean = mr.mean;
  if (!ssa_mean) return false;
  bool any_nw = false;
  for (const auto& mr : report.methods) {
    if (mr.spec.kind != MethodSpec::Kind::kGassa || mr.spec.whiten) continue;
    any_nw = true;
    if (!mr.mean || !(*mr.mean < *ssa_mean)) return false;
  }
  return any_nw;
}

}  // namespace gassa::eval
