#include "gassa/io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include <json.hpp>

namespace gassa::io {

namespace {

using nlohmann::json;
using spd::SymPosDef;

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& context) {
  if (!j.is_object()) throw SchemaError(context + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key))
      throw SchemaError("unknown key \"" + key + "\" in " + context);
  }
}

const json& need(const json& j, const char* key, const std::string& context) {
  if (!j.is_object() || !j.contains(key))
    throw SchemaError("missing key \"" + std::string(key) + "\" in " + context);
  return j.at(key);
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& context) {
  check_keys(j, {"rows", "cols", "data"}, context);
  const auto rows = need(j, "rows", context).get<Eigen::Index>();
  const auto cols = need(j, "cols", context).get<Eigen::Index>();
  const json& data = need(j, "data", context);
  if (rows < 1 || cols < 1)
    throw SchemaError(context + ": rows and cols must be positive");
  if (!data.is_array() ||
      data.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
    throw SchemaError(context + ": data length must equal rows*cols");
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[k++].get<double>();
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json data = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(v(i));
  return data;
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& context) {
  if (!j.is_array()) throw SchemaError(context + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

json spd_to_json(const SymPosDef& s) {
  json data = json::array();
  const Eigen::MatrixXd& m = s.matrix();
  for (int i = 0; i < s.dim(); ++i)
    for (int j = 0; j < s.dim(); ++j) data.push_back(m(i, j));
  return json{{"dim", s.dim()}, {"data", std::move(data)}};
}

SymPosDef spd_from_json(const json& j, const std::string& context) {
  check_keys(j, {"dim", "data", "label"}, context);
  const int dim = need(j, "dim", context).get<int>();
  const json& data = need(j, "data", context);
  if (dim < 1) throw SchemaError(context + ": dim must be positive");
  if (!data.is_array() ||
      data.size() != static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim))
    throw SchemaError(context + ": data length must equal dim*dim");
  Eigen::MatrixXd m(dim, dim);
  std::size_t k = 0;
  for (int i = 0; i < dim; ++i)
    for (int j2 = 0; j2 < dim; ++j2) m(i, j2) = data[k++].get<double>();
  return SymPosDef(m);
}

json subspace_to_json(const manifold::Subspace& q) {
  json basis = json::array();
  for (int i = 0; i < q.ambient_dim(); ++i)
    for (int j = 0; j < q.sub_dim(); ++j) basis.push_back(q.basis()(i, j));
  return json{{"D", q.ambient_dim()}, {"m", q.sub_dim()}, {"basis", std::move(basis)}};
}

manifold::Subspace subspace_from_json(const json& j, const std::string& context) {
  check_keys(j, {"D", "m", "basis"}, context);
  const int d = need(j, "D", context).get<int>();
  const int m = need(j, "m", context).get<int>();
  const json& basis = need(j, "basis", context);
  if (d < 2 || m < 1 || m >= d)
    throw SchemaError(context + ": need D >= 2 and 0 < m < D");
  if (!basis.is_array() ||
      basis.size() != static_cast<std::size_t>(d) * static_cast<std::size_t>(m))
    throw SchemaError(context + ": basis length must equal D*m");
  Eigen::MatrixXd b(d, m);
  std::size_t k = 0;
  for (int i = 0; i < d; ++i)
    for (int j2 = 0; j2 < m; ++j2) b(i, j2) = basis[k++].get<double>();
  return manifold::Subspace(b);
}

json optimizer_to_json(const manifold::OptimizerOptions& o) {
  return json{{"max_iter", o.max_iter},
              {"grad_tol", o.grad_tol},
              {"initial_trust_radius", o.initial_trust_radius},
              {"max_trust_radius", o.max_trust_radius},
              {"use_finite_diff_hessian", o.use_finite_diff_hessian},
              {"max_inner_iter", o.max_inner_iter}};
}

json restarts_to_json(const std::vector<RestartDiag>& diags) {
  json arr = json::array();
  for (const auto& d : diags) {
    arr.push_back(json{{"seed", d.seed},
                       {"cost", d.cost},
                       {"grad_norm", d.grad_norm},
                       {"iterations", d.iterations},
                       {"converged", d.converged},
                       {"flag", d.flag},
                       {"failed", d.failed},
                       {"error", d.error},
                       {"cost_trace", d.cost_trace}});
  }
  return arr;
}

std::string fmt_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw IoError("number formatting failed");
  return std::string(buf, ptr);
}

}  // namespace

void save_cov_set(const std::filesystem::path& path,
                  std::span<const SymPosDef> covs) {
  json arr = json::array();
  for (const auto& s : covs) arr.push_back(spd_to_json(s));
  write_text_file(path, arr.dump(2) + "\n");
}

std::vector<SymPosDef> load_cov_set(const std::filesystem::path& path) {
  json j = load_json_file(path);
  if (!j.is_array())
    throw SchemaError("covariance set must be a JSON array: " + path.string());
  std::vector<SymPosDef> covs;
  covs.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    std::ostringstream ctx;
    ctx << "covariance " << i << " of " << path.string();
    if (j[i].contains("label"))
      throw SchemaError(ctx.str() + ": unexpected label in unlabeled set");
    covs.push_back(spd_from_json(j[i], ctx.str()));
  }
  return covs;
}

void save_labeled_cov_set(const std::filesystem::path& path,
                          std::span<const eval::LabeledCov> examples) {
  json arr = json::array();
  for (const auto& ex : examples) {
    json entry = spd_to_json(ex.cov);
    entry["label"] = ex.label;
    arr.push_back(std::move(entry));
  }
  write_text_file(path, arr.dump(2) + "\n");
}

std::vector<eval::LabeledCov> load_labeled_cov_set(
    const std::filesystem::path& path) {
  json j = load_json_file(path);
  if (!j.is_array())
    throw SchemaError("labeled set must be a JSON array: " + path.string());
  std::vector<eval::LabeledCov> examples;
  examples.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    std::ostringstream ctx;
    ctx << "labeled covariance " << i << " of " << path.string();
    const int label = need(j[i], "label", ctx.str()).get<int>();
    examples.push_back(eval::LabeledCov{spd_from_json(j[i], ctx.str()), label});
  }
  return examples;
}

void save_subspace(const std::filesystem::path& path, const manifold::Subspace& q) {
  write_text_file(path, subspace_to_json(q).dump(2) + "\n");
}

manifold::Subspace load_subspace(const std::filesystem::path& path) {
  return subspace_from_json(load_json_file(path), path.string());
}

void save_model(const std::filesystem::path& path,
                const datagen::MixingModel& model) {
  json c = json::array();
  json mu = json::array();
  json lambda_n = json::array();
  for (int i = 0; i < model.epochs; ++i) {
    c.push_back(matrix_to_json(model.c[i]));
    mu.push_back(vector_to_json(model.mu[i]));
    lambda_n.push_back(spd_to_json(model.lambda_n[i]));
  }
  json j{{"D", model.ambient_dim()},
         {"m", model.s_dim()},
         {"epochs", model.epochs},
         {"epoch_len", model.epoch_len},
         {"seed", model.seed},
         {"a", matrix_to_json(model.a)},
         {"lambda_s", spd_to_json(model.lambda_s)},
         {"c", std::move(c)},
         {"mu", std::move(mu)},
         {"lambda_n", std::move(lambda_n)}};
  write_text_file(path, j.dump(2) + "\n");
}

datagen::MixingModel load_model(const std::filesystem::path& path) {
  json j = load_json_file(path);
  const std::string context = "model " + path.string();
  check_keys(j, {"D", "m", "epochs", "epoch_len", "seed", "a", "lambda_s", "c",
                 "mu", "lambda_n"},
             context);
  datagen::MixingModel model;
  const int d = need(j, "D", context).get<int>();
  const int m = need(j, "m", context).get<int>();
  model.epochs = need(j, "epochs", context).get<int>();
  model.epoch_len = need(j, "epoch_len", context).get<int>();
  model.seed = need(j, "seed", context).get<std::uint64_t>();
  model.a = matrix_from_json(need(j, "a", context), context + ".a");
  model.lambda_s = spd_from_json(need(j, "lambda_s", context), context + ".lambda_s");
  const json& c = need(j, "c", context);
  const json& mu = need(j, "mu", context);
  const json& lambda_n = need(j, "lambda_n", context);
  if (!c.is_array() || !mu.is_array() || !lambda_n.is_array())
    throw SchemaError(context + ": c, mu, lambda_n must be arrays");
  for (std::size_t i = 0; i < c.size(); ++i)
    model.c.push_back(matrix_from_json(c[i], context + ".c"));
  for (std::size_t i = 0; i < mu.size(); ++i)
    model.mu.push_back(vector_from_json(mu[i], context + ".mu"));
  for (std::size_t i = 0; i < lambda_n.size(); ++i)
    model.lambda_n.push_back(spd_from_json(lambda_n[i], context + ".lambda_n"));
  if (model.ambient_dim() != d || model.s_dim() != m)
    throw SchemaError(context + ": D/m fields disagree with matrix shapes");
  try {
    model.validate();
  } catch (const Error& e) {
    throw SchemaError(context + ": invalid model: " + e.what());
  }
  return model;
}

void save_signals_csv(const std::filesystem::path& path,
                      const Eigen::MatrixXd& samples) {
  std::ostringstream out;
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    if (j > 0) out << ',';
    out << "ch" << j;
  }
  out << '\n';
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    for (Eigen::Index j = 0; j < samples.cols(); ++j) {
      if (j > 0) out << ',';
      out << fmt_double(samples(i, j));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

Eigen::MatrixXd load_signals_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      // Header row is optional: skip the line if it does not parse as data.
      double probe;
      const char* begin = line.data();
      auto [ptr, ec] = std::from_chars(begin, begin + line.size(), probe);
      if (ec != std::errc{}) continue;
    }
    std::vector<double> row;
    const char* ptr = line.data();
    const char* end = line.data() + line.size();
    while (ptr < end) {
      double value;
      auto [next, ec] = std::from_chars(ptr, end, value);
      if (ec != std::errc{})
        throw SchemaError("invalid number in CSV " + path.string() + ": " + line);
      row.push_back(value);
      ptr = next;
      if (ptr < end) {
        if (*ptr != ',')
          throw SchemaError("expected comma in CSV " + path.string());
        ++ptr;
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw SchemaError("ragged CSV rows in " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw SchemaError("no data rows in CSV " + path.string());
  Eigen::MatrixXd samples(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < samples.rows(); ++i)
    for (Eigen::Index j = 0; j < samples.cols(); ++j)
      samples(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return samples;
}

void save_gassa_result(const std::filesystem::path& path,
                       const GassaResult& result, const GassaConfig& config) {
  json j{{"method", "gassa"},
         {"metric", config.metric == spd::MetricKind::kAirm ? "airm" : "stein"},
         {"whiten", config.whiten},
         {"m", config.m},
         {"cost", result.cost},
         {"best_restart", result.best_restart},
         {"degenerate_fully_stationary", result.degenerate_fully_stationary},
         {"s_basis", subspace_to_json(result.s_basis)},
         {"n_basis", subspace_to_json(result.n_basis)},
         {"restarts", restarts_to_json(result.restarts)},
         {"config",
          json{{"restarts", config.restarts},
               {"seed", config.seed},
               {"threads", config.threads},
               {"gradient_mode",
                config.gradient_mode == GradientMode::kAnalytic
                    ? "analytic"
                    : "finite_difference"},
               {"optimizer", optimizer_to_json(config.optimizer)},
               {"mean", json{{"tol", config.mean_options.tol},
                             {"max_iter", config.mean_options.max_iter}}}}}};
  if (result.whitening) {
    j["whitening"] = json{{"mean", spd_to_json(result.whitening->mean)},
                          {"whitener", matrix_to_json(result.whitening->whitener)}};
  } else {
    j["whitening"] = nullptr;
  }
  write_text_file(path, j.dump(2) + "\n");
}

void save_ssa_result(const std::filesystem::path& path,
                     const ssa::SsaResult& result, const ssa::SsaConfig& config) {
  json j{{"method", "ssa"},
         {"m", config.m},
         {"cost", result.cost},
         {"best_restart", result.best_restart},
         {"rotation", matrix_to_json(result.rotation)},
         {"projection", matrix_to_json(result.projection)},
         {"whitener", matrix_to_json(result.whitener)},
         {"n_basis", subspace_to_json(result.n_basis)},
         {"restarts", restarts_to_json(result.restarts)},
         {"config", json{{"restarts", config.restarts},
                         {"seed", config.seed},
                         {"threads", config.threads},
                         {"optimizer", optimizer_to_json(config.optimizer)}}}};
  write_text_file(path, j.dump(2) + "\n");
}

LoadedFit load_fit_result(const std::filesystem::path& path) {
  json j = load_json_file(path);
  const std::string context = "fit result " + path.string();
  const std::string method = need(j, "method", context).get<std::string>();
  manifold::Subspace n_basis =
      subspace_from_json(need(j, "n_basis", context), context + ".n_basis");
  if (method == "gassa") {
    return LoadedFit{method, std::move(n_basis),
                     subspace_from_json(need(j, "s_basis", context),
                                        context + ".s_basis")};
  }
  if (method == "ssa") {
    Eigen::MatrixXd projection =
        matrix_from_json(need(j, "projection", context), context + ".projection");
    return LoadedFit{method, std::move(n_basis),
                     manifold::Subspace::from_span(projection.transpose())};
  }
  throw SchemaError(context + ": unknown method \"" + method + "\"");
}

namespace {

json method_result_to_json(const eval::MethodResult& mr) {
  json j{{"name", mr.spec.name()},
         {"errors", mr.errors},
         {"raw_errors", mr.raw_errors},
         {"costs", mr.costs},
         {"cost_traces", mr.cost_traces},
         {"failed_repeats", mr.failed_repeats},
         {"failure_messages", mr.failure_messages},
         {"seconds", mr.seconds}};
  j["mean"] = mr.mean ? json(*mr.mean) : json(nullptr);
  j["stddev"] = mr.stddev ? json(*mr.stddev) : json(nullptr);
  j["stderr"] = mr.stderr_mean ? json(*mr.stderr_mean) : json(nullptr);
  return j;
}

}  // namespace

void save_report_json(const std::filesystem::path& path,
                      const eval::ExperimentReport& report) {
  json method_names = json::array();
  for (const auto& spec : report.params.methods) method_names.push_back(spec.name());
  json methods = json::array();
  for (const auto& mr : report.methods) methods.push_back(method_result_to_json(mr));
  const auto& p = report.params;
  json j{{"params",
          json{{"D", p.dim},
               {"m", p.m},
               {"epochs", p.epochs},
               {"epoch_len", p.epoch_len},
               {"repeats", p.repeats},
               {"seed", p.seed},
               {"restarts", p.restarts},
               {"threads", p.threads},
               {"methods", std::move(method_names)},
               {"scales", json{{"eig_min", p.scales.eig_min},
                               {"eig_max", p.scales.eig_max},
                               {"c_scale", p.scales.c_scale},
                               {"mu_scale", p.scales.mu_scale},
                               {"constant_lambda_n", p.scales.constant_lambda_n},
                               {"orthogonal_mixing", p.scales.orthogonal_mixing}}},
               {"estimator",
                json{{"kind", p.estimator.kind == ssa::CovEstimator::Kind::kEmpirical
                                  ? "empirical"
                                  : "shrinkage"},
                     {"intensity", p.estimator.intensity
                                       ? json(*p.estimator.intensity)
                                       : json(nullptr)},
                     {"unbiased", p.estimator.unbiased}}},
               {"optimizer", optimizer_to_json(p.optimizer)}}},
         {"valid", report.valid},
         {"methods", std::move(methods)}};
  write_text_file(path, j.dump(2) + "\n");
}

void save_report_csv(const std::filesystem::path& path,
                     const eval::ExperimentReport& report) {
  std::ostringstream out;
  out << "method,mean,std,repeats\n";
  for (const auto& mr : report.methods) {
    out << mr.spec.name() << ',';
    if (mr.mean) out << fmt_double(*mr.mean);
    out << ',';
    if (mr.stddev) out << fmt_double(*mr.stddev);
    out << ',' << mr.errors.size() << '\n';
  }
  write_text_file(path, out.str());
}

}  // namespace gassa::io
