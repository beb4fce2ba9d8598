// Command-line front end: synthesize benchmark data, fit gaSSA/SSA,
// evaluate recovered subspaces, and run the toy benchmark. A single JSON
// config file can carry per-command parameter blocks; flags override
// config keys. All randomness flows from one master seed.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gassa/datagen.hpp"
#include "gassa/errors.hpp"
#include "gassa/eval.hpp"
#include "gassa/gassa.hpp"
#include "gassa/io.hpp"
#include "gassa/manifold.hpp"
#include "gassa/spd.hpp"
#include "gassa/ssa.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace gassa;

// ---------------------------------------------------------------------------
// Config-file plumbing

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in config file " + path + ": " + e.what());
  }
}

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const auto& k : allowed)
      if (k == key) {
        known = true;
        break;
      }
    if (!known) throw ConfigError("unknown key \"" + key + "\" in " + context);
  }
}

template <typename T>
T get_as(const json& j, const std::string& context) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("wrong type for " + context);
  }
}

template <typename T>
void maybe(const json& block, const char* key, T& target,
           const std::string& context) {
  if (block.contains(key)) target = get_as<T>(block.at(key), context + "." + key);
}

spd::MetricKind parse_metric(const std::string& name) {
  if (name == "airm") return spd::MetricKind::kAirm;
  if (name == "stein") return spd::MetricKind::kStein;
  throw ConfigError("metric must be \"airm\" or \"stein\", got \"" + name + "\"");
}

eval::MethodSpec parse_method_name(const std::string& name) {
  for (const auto& spec : eval::default_methods())
    if (spec.name() == name) return spec;
  throw ConfigError(
      "unknown method \"" + name +
      "\" (expected gassa-airm-w, gassa-airm-nw, gassa-stein-w, "
      "gassa-stein-nw, or ssa)");
}

ssa::CovEstimator parse_estimator(const json& block, const std::string& context) {
  check_keys(block, {"kind", "intensity", "unbiased"}, context);
  ssa::CovEstimator est;
  if (block.contains("kind")) {
    const auto kind = get_as<std::string>(block.at("kind"), context + ".kind");
    if (kind == "empirical")
      est.kind = ssa::CovEstimator::Kind::kEmpirical;
    else if (kind == "shrinkage")
      est.kind = ssa::CovEstimator::Kind::kShrinkage;
    else
      throw ConfigError(context + ".kind must be \"empirical\" or \"shrinkage\"");
  }
  if (block.contains("intensity") && !block.at("intensity").is_null())
    est.intensity = get_as<double>(block.at("intensity"), context + ".intensity");
  maybe(block, "unbiased", est.unbiased, context);
  return est;
}

datagen::GenScales parse_scales(const json& block, const std::string& context) {
  check_keys(block,
             {"eig_min", "eig_max", "c_scale", "mu_scale", "constant_lambda_n",
              "orthogonal_mixing"},
             context);
  datagen::GenScales scales;
  maybe(block, "eig_min", scales.eig_min, context);
  maybe(block, "eig_max", scales.eig_max, context);
  maybe(block, "c_scale", scales.c_scale, context);
  maybe(block, "mu_scale", scales.mu_scale, context);
  maybe(block, "constant_lambda_n", scales.constant_lambda_n, context);
  maybe(block, "orthogonal_mixing", scales.orthogonal_mixing, context);
  return scales;
}

manifold::OptimizerOptions parse_optimizer(const json& block,
                                           const std::string& context) {
  check_keys(block,
             {"max_iter", "grad_tol", "initial_trust_radius", "max_trust_radius",
              "use_finite_diff_hessian", "max_inner_iter"},
             context);
  manifold::OptimizerOptions opts;
  maybe(block, "max_iter", opts.max_iter, context);
  maybe(block, "grad_tol", opts.grad_tol, context);
  maybe(block, "initial_trust_radius", opts.initial_trust_radius, context);
  maybe(block, "max_trust_radius", opts.max_trust_radius, context);
  maybe(block, "use_finite_diff_hessian", opts.use_finite_diff_hessian, context);
  maybe(block, "max_inner_iter", opts.max_inner_iter, context);
  return opts;
}

// ---------------------------------------------------------------------------
// Shared command state

struct Shared {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;

  json config = json::object();
  std::uint64_t master_seed = 0;
  fs::path out_dir = ".";
  int n_threads = 1;

  void resolve() {
    if (!config_path.empty()) config = load_config_file(config_path);
    check_keys(config, {"seed", "out", "threads", "synth", "fit", "eval", "bench"},
               "config");
    if (config.contains("seed"))
      master_seed = get_as<std::uint64_t>(config.at("seed"), "config.seed");
    if (config.contains("out"))
      out_dir = get_as<std::string>(config.at("out"), "config.out");
    if (config.contains("threads"))
      n_threads = get_as<int>(config.at("threads"), "config.threads");
    if (seed) master_seed = *seed;
    if (out) out_dir = *out;
    if (threads) n_threads = *threads;
    if (n_threads < 0) throw ConfigError("threads must be non-negative");
  }

  json block(const char* name, const std::vector<std::string>& allowed) const {
    if (!config.contains(name)) return json::object();
    json b = config.at(name);
    check_keys(b, allowed, std::string("config.") + name);
    return b;
  }

  fs::path out_file(const std::string& name) const {
    fs::create_directories(out_dir);
    return out_dir / name;
  }
};

void print_fit_summary(double cost, const std::vector<RestartDiag>& diags,
                       int best) {
  double grad_norm = 0.0;
  int iterations = 0;
  if (best >= 0 && best < static_cast<int>(diags.size())) {
    grad_norm = diags[best].grad_norm;
    iterations = diags[best].iterations;
  }
  std::ostringstream line;
  line.precision(10);
  line << "cost=" << cost << " iterations=" << iterations
       << " grad_norm=" << grad_norm;
  std::cout << line.str() << "\n";
}

// ---------------------------------------------------------------------------
// synth

struct SynthOpts {
  Shared shared;
  std::optional<int> dim, m, epochs, epoch_len;
};

int cmd_synth(SynthOpts& o) {
  o.shared.resolve();
  json block = o.shared.block(
      "synth", {"D", "m", "epochs", "epoch_len", "scales", "estimator"});
  int dim = 19, m = 12, epochs = 50, epoch_len = 250;
  maybe(block, "D", dim, "config.synth");
  maybe(block, "m", m, "config.synth");
  maybe(block, "epochs", epochs, "config.synth");
  maybe(block, "epoch_len", epoch_len, "config.synth");
  if (o.dim) dim = *o.dim;
  if (o.m) m = *o.m;
  if (o.epochs) epochs = *o.epochs;
  if (o.epoch_len) epoch_len = *o.epoch_len;
  datagen::GenScales scales =
      block.contains("scales")
          ? parse_scales(block.at("scales"), "config.synth.scales")
          : datagen::GenScales{};
  ssa::CovEstimator estimator =
      block.contains("estimator")
          ? parse_estimator(block.at("estimator"), "config.synth.estimator")
          : ssa::CovEstimator{};

  datagen::MixingModel model = datagen::make_model(
      dim, m, epochs, epoch_len, o.shared.master_seed, scales);
  datagen::SignalSet signals = datagen::gen_signals(model);
  auto segments = datagen::split_epochs(signals.samples, epoch_len, 0.0);
  std::vector<spd::SymPosDef> covs;
  covs.reserve(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i)
    covs.push_back(
        ssa::epoch_stats(segments[i], estimator, static_cast<int>(i)).cov);

  io::save_signals_csv(o.shared.out_file("signals.csv"), signals.samples);
  io::save_model(o.shared.out_file("model.json"), model);
  io::save_cov_set(o.shared.out_file("covs.json"), covs);
  io::save_subspace(o.shared.out_file("truth_nspace.json"),
                    datagen::true_n_space(model));
  std::cout << "wrote " << covs.size() << " covariance matrices, "
            << signals.samples.rows() << " samples of dimension " << dim
            << " to " << o.shared.out_dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// fit

struct FitOpts {
  Shared shared;
  std::optional<std::string> method, metric, input, signals, gradient_mode;
  bool whiten_flag = false;
  bool no_whiten_flag = false;
  std::optional<int> m, restarts, epoch_len;
};

int cmd_fit(FitOpts& o) {
  o.shared.resolve();
  json block = o.shared.block(
      "fit", {"method", "metric", "whiten", "m", "restarts", "input", "signals",
              "epoch_len", "estimator", "optimizer", "gradient_mode"});
  std::string method = "gassa", metric_name = "airm", gradient_mode = "analytic";
  std::string input, signals_path;
  bool whiten = true;
  int m = 1, restarts = 5, epoch_len = 0;
  maybe(block, "method", method, "config.fit");
  maybe(block, "metric", metric_name, "config.fit");
  maybe(block, "whiten", whiten, "config.fit");
  maybe(block, "m", m, "config.fit");
  maybe(block, "restarts", restarts, "config.fit");
  maybe(block, "input", input, "config.fit");
  maybe(block, "signals", signals_path, "config.fit");
  maybe(block, "epoch_len", epoch_len, "config.fit");
  maybe(block, "gradient_mode", gradient_mode, "config.fit");
  manifold::OptimizerOptions optimizer =
      block.contains("optimizer")
          ? parse_optimizer(block.at("optimizer"), "config.fit.optimizer")
          : manifold::OptimizerOptions{};
  ssa::CovEstimator estimator =
      block.contains("estimator")
          ? parse_estimator(block.at("estimator"), "config.fit.estimator")
          : ssa::CovEstimator{};
  if (o.whiten_flag && o.no_whiten_flag)
    throw ConfigError("--whiten and --no-whiten are mutually exclusive");
  if (o.method) method = *o.method;
  if (o.metric) metric_name = *o.metric;
  if (o.whiten_flag) whiten = true;
  if (o.no_whiten_flag) whiten = false;
  if (o.m) m = *o.m;
  if (o.restarts) restarts = *o.restarts;
  if (o.input) input = *o.input;
  if (o.signals) signals_path = *o.signals;
  if (o.epoch_len) epoch_len = *o.epoch_len;
  if (o.gradient_mode) gradient_mode = *o.gradient_mode;

  if (method != "gassa" && method != "ssa")
    throw ConfigError("method must be \"gassa\" or \"ssa\", got \"" + method +
                      "\"");
  if (gradient_mode != "analytic" && gradient_mode != "finite_difference")
    throw ConfigError(
        "gradient_mode must be \"analytic\" or \"finite_difference\"");
  if (input.empty() && signals_path.empty())
    throw ConfigError("fit needs an input covariance set (--input) or a "
                      "signals CSV (--signals)");
  if (!input.empty() && !signals_path.empty())
    throw ConfigError("--input and --signals are mutually exclusive");

  // Gather epoch statistics before opening any output file, so failures
  // leave no partial results behind.
  std::vector<ssa::EpochStats> stats;
  std::vector<spd::SymPosDef> covs;
  if (!input.empty()) {
    if (method == "ssa")
      throw ConfigError(
          "the SSA baseline needs epoch means: pass --signals, not --input");
    covs = io::load_cov_set(input);
  } else {
    if (epoch_len <= 0)
      throw ConfigError("--epoch-len is required with --signals");
    Eigen::MatrixXd samples = io::load_signals_csv(signals_path);
    auto segments = datagen::split_epochs(samples, epoch_len, 0.0);
    for (std::size_t i = 0; i < segments.size(); ++i) {
      stats.push_back(
          ssa::epoch_stats(segments[i], estimator, static_cast<int>(i)));
      covs.push_back(stats.back().cov);
    }
  }

  const fs::path out_path = o.shared.out_file("fit.json");
  if (method == "gassa") {
    GassaConfig config;
    config.m = m;
    config.metric = parse_metric(metric_name);
    config.whiten = whiten;
    config.restarts = restarts;
    config.seed = o.shared.master_seed;
    config.gradient_mode = gradient_mode == "analytic"
                               ? GradientMode::kAnalytic
                               : GradientMode::kFiniteDifference;
    config.optimizer = optimizer;
    config.threads = o.shared.n_threads;
    GassaResult result = fit(covs, config);
    io::save_gassa_result(out_path, result, config);
    print_fit_summary(result.cost, result.restarts, result.best_restart);
  } else {
    ssa::SsaConfig config;
    config.m = m;
    config.restarts = restarts;
    config.seed = o.shared.master_seed;
    config.optimizer = optimizer;
    config.threads = o.shared.n_threads;
    ssa::SsaResult result = ssa::fit_ssa(stats, config);
    io::save_ssa_result(out_path, result, config);
    print_fit_summary(result.cost, result.restarts, result.best_restart);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  Shared shared;
  std::string result_arg, truth_arg;
  std::optional<std::string> labeled, metric;
};

int cmd_eval(EvalOpts& o) {
  o.shared.resolve();
  json block = o.shared.block("eval", {"result", "truth", "labeled", "metric"});
  std::string result_path = o.result_arg, truth_path = o.truth_arg;
  std::string labeled_path, metric_name = "airm";
  if (result_path.empty()) maybe(block, "result", result_path, "config.eval");
  if (truth_path.empty()) maybe(block, "truth", truth_path, "config.eval");
  maybe(block, "labeled", labeled_path, "config.eval");
  maybe(block, "metric", metric_name, "config.eval");
  if (o.labeled) labeled_path = *o.labeled;
  if (o.metric) metric_name = *o.metric;
  if (result_path.empty() || truth_path.empty())
    throw ConfigError("eval needs a fit-result file and a truth file");

  io::LoadedFit fit = io::load_fit_result(result_path);

  // The truth file is either a generator model (key "a") or a bare subspace.
  std::ifstream truth_in(truth_path);
  if (!truth_in) throw IoError("cannot open for reading: " + truth_path);
  json probe;
  try {
    probe = json::parse(truth_in);
  } catch (const json::parse_error& e) {
    throw SchemaError("invalid JSON in " + truth_path + ": " + e.what());
  }
  double raw = 0.0, normalized = 0.0;
  if (probe.is_object() && probe.contains("a")) {
    datagen::MixingModel model = io::load_model(truth_path);
    if (fit.n_basis.ambient_dim() != model.ambient_dim())
      throw SchemaError("fit result and truth model disagree on the ambient "
                        "dimension");
    raw = eval::nspace_error_raw(fit.n_basis, model);
    normalized = eval::nspace_error(fit.n_basis, model);
  } else {
    manifold::Subspace truth = io::load_subspace(truth_path);
    if (fit.n_basis.ambient_dim() != truth.ambient_dim() ||
        fit.n_basis.sub_dim() != truth.sub_dim())
      throw SchemaError("fit result and truth subspace disagree on dimensions");
    raw = manifold::grassmann_dist(fit.n_basis, truth);
    const double max_dist =
        std::sqrt(static_cast<double>(truth.sub_dim())) *
        3.14159265358979323846 / 2.0;
    normalized = raw / max_dist;
  }

  std::optional<double> accuracy;
  if (!labeled_path.empty()) {
    std::vector<eval::LabeledCov> examples = io::load_labeled_cov_set(labeled_path);
    if (!examples.empty() &&
        examples.front().cov.dim() != fit.s_basis.ambient_dim())
      throw SchemaError("labeled covariances and fit result disagree on the "
                        "ambient dimension");
    eval::MdmModel mdm =
        eval::mdm_train(examples, fit.s_basis, parse_metric(metric_name));
    int correct = 0;
    for (const auto& ex : examples)
      if (eval::mdm_classify(mdm, ex.cov) == ex.label) ++correct;
    accuracy = static_cast<double>(correct) / static_cast<double>(examples.size());
  }

  json out{{"nspace_error", normalized}, {"raw_error", raw}};
  out["accuracy"] = accuracy ? json(*accuracy) : json(nullptr);
  {
    const fs::path out_path = o.shared.out_file("eval.json");
    std::ofstream out_file(out_path);
    if (!out_file) throw IoError("cannot open for writing: " + out_path.string());
    out_file << out.dump(2) << "\n";
  }
  std::ostringstream line;
  line.precision(10);
  line << "nspace_error=" << normalized << " raw=" << raw;
  if (accuracy) line << " accuracy=" << *accuracy;
  std::cout << line.str() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchOpts {
  Shared shared;
  std::optional<int> dim, m, epochs, epoch_len, repeats, restarts;
  bool assert_ordering = false;
};

int cmd_bench(BenchOpts& o) {
  o.shared.resolve();
  json block = o.shared.block(
      "bench", {"D", "m", "epochs", "epoch_len", "repeats", "restarts",
                "methods", "scales", "estimator", "optimizer"});
  eval::ExperimentParams params;
  maybe(block, "D", params.dim, "config.bench");
  maybe(block, "m", params.m, "config.bench");
  maybe(block, "epochs", params.epochs, "config.bench");
  maybe(block, "epoch_len", params.epoch_len, "config.bench");
  maybe(block, "repeats", params.repeats, "config.bench");
  maybe(block, "restarts", params.restarts, "config.bench");
  if (block.contains("methods")) {
    const json& names = block.at("methods");
    if (!names.is_array())
      throw ConfigError("config.bench.methods must be an array of names");
    params.methods.clear();
    for (const auto& name : names)
      params.methods.push_back(
          parse_method_name(get_as<std::string>(name, "config.bench.methods")));
  }
  if (block.contains("scales"))
    params.scales = parse_scales(block.at("scales"), "config.bench.scales");
  if (block.contains("estimator"))
    params.estimator =
        parse_estimator(block.at("estimator"), "config.bench.estimator");
  if (block.contains("optimizer"))
    params.optimizer =
        parse_optimizer(block.at("optimizer"), "config.bench.optimizer");
  if (o.dim) params.dim = *o.dim;
  if (o.m) params.m = *o.m;
  if (o.epochs) params.epochs = *o.epochs;
  if (o.epoch_len) params.epoch_len = *o.epoch_len;
  if (o.repeats) params.repeats = *o.repeats;
  if (o.restarts) params.restarts = *o.restarts;
  params.seed = o.shared.master_seed;
  params.threads = o.shared.n_threads;

  eval::ExperimentReport report = eval::run_toy_experiment(params);
  io::save_report_json(o.shared.out_file("report.json"), report);
  io::save_report_csv(o.shared.out_file("report.csv"), report);

  for (const auto& mr : report.methods) {
    std::ostringstream line;
    line.precision(6);
    line << mr.spec.name() << " mean=";
    if (mr.mean)
      line << *mr.mean;
    else
      line << "n/a";
    line << " stderr=";
    if (mr.stderr_mean)
      line << *mr.stderr_mean;
    else
      line << "n/a";
    line << " failures=" << mr.failed_repeats.size();
    std::cout << line.str() << "\n";
  }
  if (!report.valid)
    std::cout << "warning: more than 20% of repeats failed for at least one "
                 "method\n";

  if (o.assert_ordering && !eval::nw_beats_ssa(report)) {
    std::cerr << "error: OrderingAssertion: gaSSA (unwhitened) mean n-space "
                 "error is not below the SSA baseline\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------

void add_shared(CLI::App* cmd, Shared& shared) {
  cmd->add_option("--config", shared.config_path,
                  "JSON config file; flags override its keys");
  cmd->add_option("--seed", shared.seed, "master seed");
  cmd->add_option("--out", shared.out, "output directory (default .)");
  cmd->add_option("--threads", shared.threads,
                  "worker cap (0 = hardware concurrency)");
}

int exit_code_for(const Error& e) {
  const std::string& cat = e.category();
  if (cat == "Config" || cat == "Schema" || cat == "Io" || cat == "BadDims" ||
      cat == "BadWindow")
    return 2;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gassa: geometry-aware stationary subspace analysis"};
  app.require_subcommand(1);

  SynthOpts synth;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "generate synthetic signals + covariances");
  add_shared(synth_cmd, synth.shared);
  synth_cmd->add_option("--D", synth.dim, "ambient dimension");
  synth_cmd->add_option("--m", synth.m, "stationary subspace dimension");
  synth_cmd->add_option("--epochs", synth.epochs, "number of epochs");
  synth_cmd->add_option("--epoch-len", synth.epoch_len, "samples per epoch");

  FitOpts fit;
  CLI::App* fit_cmd =
      app.add_subcommand("fit", "estimate the stationary subspace");
  add_shared(fit_cmd, fit.shared);
  fit_cmd->add_option("--method", fit.method, "gassa or ssa");
  fit_cmd->add_option("--metric", fit.metric, "airm or stein");
  fit_cmd->add_flag("--whiten", fit.whiten_flag,
                    "whiten by the metric-matched mean first (default)");
  fit_cmd->add_flag("--no-whiten", fit.no_whiten_flag,
                    "optimize in the original coordinates");
  fit_cmd->add_option("--m", fit.m, "stationary subspace dimension");
  fit_cmd->add_option("--restarts", fit.restarts, "random restarts");
  fit_cmd->add_option("--input", fit.input, "covariance-set JSON");
  fit_cmd->add_option("--signals", fit.signals, "signals CSV");
  fit_cmd->add_option("--epoch-len", fit.epoch_len,
                      "samples per epoch (with --signals)");
  fit_cmd->add_option("--gradient-mode", fit.gradient_mode,
                      "analytic or finite_difference");

  EvalOpts eval_opts;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "score a fit result against ground truth");
  add_shared(eval_cmd, eval_opts.shared);
  eval_cmd->add_option("result", eval_opts.result_arg, "fit-result JSON");
  eval_cmd->add_option("truth", eval_opts.truth_arg,
                       "generator model JSON or subspace JSON");
  eval_cmd->add_option("--labeled", eval_opts.labeled,
                       "labeled covariance set for MDM accuracy");
  eval_cmd->add_option("--metric", eval_opts.metric, "MDM metric");

  BenchOpts bench;
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "run the toy benchmark across methods");
  add_shared(bench_cmd, bench.shared);
  bench_cmd->add_option("--D", bench.dim, "ambient dimension");
  bench_cmd->add_option("--m", bench.m, "stationary subspace dimension");
  bench_cmd->add_option("--epochs", bench.epochs, "number of epochs");
  bench_cmd->add_option("--epoch-len", bench.epoch_len, "samples per epoch");
  bench_cmd->add_option("--repeats", bench.repeats, "experiment repeats");
  bench_cmd->add_option("--restarts", bench.restarts, "restarts per fit");
  bench_cmd->add_flag("--assert-ordering", bench.assert_ordering,
                      "fail unless gaSSA (nw) beats SSA on mean error");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth);
    if (fit_cmd->parsed()) return cmd_fit(fit);
    if (eval_cmd->parsed()) return cmd_eval(eval_opts);
    if (bench_cmd->parsed()) return cmd_bench(bench);
  } catch (const Error& e) {
    std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
