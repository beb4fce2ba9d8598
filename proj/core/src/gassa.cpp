#include "gassa/gassa.hpp"

#include <cmath>
#include <sstream>

#include "gassa/parallel.hpp"

namespace gassa {

namespace {

using spd::MetricKind;
using spd::SymPosDef;

void require_cost_shapes(const Eigen::MatrixXd& q_basis,
                         std::span<const SymPosDef> covs,
                         const SymPosDef& anchor) {
  if (covs.empty()) throw InsufficientDataError("empty covariance set");
  const int d = static_cast<int>(q_basis.rows());
  const int m = static_cast<int>(q_basis.cols());
  if (m <= 0 || m >= d) {
    std::ostringstream msg;
    msg << "basis must be D x m with 0 < m < D, got " << d << "x" << m;
    throw BadDimsError(msg.str());
  }
  if (anchor.dim() != d)
    throw DimMismatchError("anchor dimension does not match basis rows");
  for (const auto& s : covs)
    if (s.dim() != d)
      throw DimMismatchError("covariance dimension does not match basis rows");
}

Eigen::MatrixXd compress(const Eigen::MatrixXd& s, const Eigen::MatrixXd& q) {
  Eigen::MatrixXd c = q.transpose() * (s * q);
  return 0.5 * (c + c.transpose());
}

double cost_impl(const Eigen::MatrixXd& q, std::span<const SymPosDef> covs,
                 const SymPosDef& anchor, MetricKind metric) {
  Eigen::MatrixXd t = compress(anchor.matrix(), q);
  double total = 0.0;
  for (const auto& s : covs)
    total += spd::detail::dist2_raw(metric, compress(s.matrix(), q), t);
  return total;
}

/// Per-term gradients of dist2(S, T) with respect to the compressed
/// matrices, accumulated into the basis gradient:
///   d cost = sum_i [ 2 Sigma_i Q G_S^i ] + 2 anchor Q [ sum_i G_T^i ].
Eigen::MatrixXd analytic_egrad(const Eigen::MatrixXd& q,
                               std::span<const SymPosDef> covs,
                               const SymPosDef& anchor, MetricKind metric) {
  const int d = static_cast<int>(q.rows());
  const int m = static_cast<int>(q.cols());
  Eigen::MatrixXd t = compress(anchor.matrix(), q);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(d, m);
  Eigen::MatrixXd g_t_sum = Eigen::MatrixXd::Zero(m, m);

  if (metric == MetricKind::kAirm) {
    for (const auto& cov : covs) {
      Eigen::MatrixXd s = compress(cov.matrix(), q);
      // Pencil T v = lambda S v with V^T S V = I; then
      // G_S = -2 V diag(log lambda) V^T, G_T = 2 V diag(log lambda / lambda) V^T.
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> geig(
          t, s, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
      if (geig.info() != Eigen::Success)
        throw NotSpdError("compressed covariance is not positive definite");
      Eigen::ArrayXd lambda = geig.eigenvalues().array();
      if (!(lambda.minCoeff() > 0.0))
        throw NotSpdError("compressed anchor lost positive definiteness");
      Eigen::ArrayXd ln = lambda.log();
      const Eigen::MatrixXd& v = geig.eigenvectors();
      Eigen::MatrixXd g_s =
          -2.0 * v * ln.matrix().asDiagonal() * v.transpose();
      g_t_sum += 2.0 * v * (ln / lambda).matrix().asDiagonal() * v.transpose();
      grad += 2.0 * cov.matrix() * (q * g_s);
    }
  } else {
    Eigen::LLT<Eigen::MatrixXd> llt_t(t);
    if (llt_t.info() != Eigen::Success)
      throw NotSpdError("compressed anchor is not positive definite");
    Eigen::MatrixXd t_inv = llt_t.solve(Eigen::MatrixXd::Identity(m, m));
    for (const auto& cov : covs) {
      Eigen::MatrixXd s = compress(cov.matrix(), q);
      Eigen::LLT<Eigen::MatrixXd> llt_a(Eigen::MatrixXd(0.5 * (s + t)));
      Eigen::LLT<Eigen::MatrixXd> llt_s(s);
      if (llt_a.info() != Eigen::Success || llt_s.info() != Eigen::Success)
        throw NotSpdError("compressed covariance is not positive definite");
      Eigen::MatrixXd a_inv = llt_a.solve(Eigen::MatrixXd::Identity(m, m));
      Eigen::MatrixXd s_inv = llt_s.solve(Eigen::MatrixXd::Identity(m, m));
      Eigen::MatrixXd g_s = 0.5 * (a_inv - s_inv);
      g_t_sum += 0.5 * (a_inv - t_inv);
      grad += 2.0 * cov.matrix() * (q * g_s);
    }
  }
  grad += 2.0 * anchor.matrix() * (q * g_t_sum);
  return grad;
}

Eigen::MatrixXd fd_egrad(const Eigen::MatrixXd& q, std::span<const SymPosDef> covs,
                         const SymPosDef& anchor, MetricKind metric) {
  constexpr double h = 1e-6;
  Eigen::MatrixXd grad(q.rows(), q.cols());
  Eigen::MatrixXd probe = q;
  for (int j = 0; j < q.cols(); ++j) {
    for (int i = 0; i < q.rows(); ++i) {
      probe(i, j) = q(i, j) + h;
      const double up = cost_impl(probe, covs, anchor, metric);
      probe(i, j) = q(i, j) - h;
      const double down = cost_impl(probe, covs, anchor, metric);
      probe(i, j) = q(i, j);
      grad(i, j) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

}  // namespace

void GassaConfig::validate(int ambient_dim) const {
  if (m <= 0 || m >= ambient_dim) {
    std::ostringstream msg;
    msg << "subspace dimension m = " << m << " must satisfy 0 < m < D = "
        << ambient_dim;
    throw BadDimsError(msg.str());
  }
  if (restarts < 1) throw ConfigError("restarts must be at least 1");
  if (threads < 0) throw ConfigError("threads must be non-negative");
  if (optimizer.max_iter < 1) throw ConfigError("optimizer.max_iter must be at least 1");
  if (!(optimizer.grad_tol > 0.0)) throw ConfigError("optimizer.grad_tol must be positive");
  if (!(mean_options.tol > 0.0)) throw ConfigError("mean tolerance must be positive");
  if (mean_options.max_iter < 1) throw ConfigError("mean max_iter must be at least 1");
}

double cost(const manifold::Subspace& q, std::span<const SymPosDef> covs,
            const SymPosDef& anchor, MetricKind metric) {
  return cost(q.basis(), covs, anchor, metric);
}

double cost(const Eigen::MatrixXd& q_basis, std::span<const SymPosDef> covs,
            const SymPosDef& anchor, MetricKind metric) {
  require_cost_shapes(q_basis, covs, anchor);
  return cost_impl(q_basis, covs, anchor, metric);
}

Eigen::MatrixXd euclidean_gradient(const Eigen::MatrixXd& q_basis,
                                   std::span<const SymPosDef> covs,
                                   const SymPosDef& anchor, MetricKind metric,
                                   GradientMode mode) {
  require_cost_shapes(q_basis, covs, anchor);
  return mode == GradientMode::kAnalytic
             ? analytic_egrad(q_basis, covs, anchor, metric)
             : fd_egrad(q_basis, covs, anchor, metric);
}

GassaResult fit(std::span<const SymPosDef> covs, const GassaConfig& config) {
  if (covs.size() < 2)
    throw InsufficientDataError(
        "need at least two covariance matrices to separate stationary from "
        "non-stationary directions");
  const int d = covs.front().dim();
  for (const auto& s : covs)
    if (s.dim() != d)
      throw DimMismatchError("covariance set mixes dimensions");
  config.validate(d);
  const int m = config.m;

  // A fully stationary set carries no directional information: every
  // subspace attains cost zero. Return a canonical one, flagged.
  bool all_equal = true;
  for (const auto& s : covs) {
    if ((s.matrix() - covs.front().matrix()).norm() >
        1e-12 * covs.front().matrix().norm()) {
      all_equal = false;
      break;
    }
  }
  if (all_equal) {
    manifold::Subspace s_basis =
        manifold::unchecked_subspace(Eigen::MatrixXd::Identity(d, m));
    manifold::Subspace n_basis = manifold::complement(s_basis);
    std::optional<spd::WhiteningContext> ctx;
    if (config.whiten)
      ctx = std::move(
          spd::whiten_set(covs, config.metric, config.mean_options).second);
    return GassaResult{std::move(s_basis), std::move(n_basis), 0.0, -1,
                       {},      std::move(ctx),  true};
  }

  // Prepare the working set and the anchor of the compressed distances:
  // the metric-matched mean, or the identity after whitening by it.
  std::vector<SymPosDef> working;
  std::optional<spd::WhiteningContext> ctx;
  if (config.whiten) {
    auto [whitened, context] =
        spd::whiten_set(covs, config.metric, config.mean_options);
    working = std::move(whitened);
    ctx = std::move(context);
  } else {
    working.assign(covs.begin(), covs.end());
  }
  const SymPosDef anchor = config.whiten
                               ? SymPosDef::identity(d)
                               : spd::mean(config.metric, covs, config.mean_options);
  std::span<const SymPosDef> work_span(working);

  const auto cost_fn = [&](const Eigen::MatrixXd& q) {
    return cost_impl(q, work_span, anchor, config.metric);
  };
  const auto egrad_fn = [&](const Eigen::MatrixXd& q) {
    return config.gradient_mode == GradientMode::kAnalytic
               ? analytic_egrad(q, work_span, anchor, config.metric)
               : fd_egrad(q, work_span, anchor, config.metric);
  };

  std::vector<RestartDiag> diags(config.restarts);
  std::vector<std::optional<manifold::MinimizeResult>> outcomes(config.restarts);
  parallel_for(config.restarts, config.threads, [&](int r) {
    RestartDiag diag;
    diag.seed = config.seed + static_cast<std::uint64_t>(r);
    try {
      manifold::Subspace q0 = manifold::random_subspace(d, m, diag.seed);
      manifold::MinimizeResult run =
          manifold::minimize(cost_fn, egrad_fn, q0, config.optimizer);
      diag.cost = run.cost;
      diag.grad_norm = run.stats.final_grad_norm;
      diag.iterations = run.stats.iterations;
      diag.converged = run.stats.converged;
      diag.flag = run.stats.flag;
      diag.cost_trace = run.stats.cost_trace;
      outcomes[r] = std::move(run);
    } catch (const Error& e) {
      diag.failed = true;
      diag.error = e.category() + ": " + e.what();
    }
    diags[r] = std::move(diag);
  });

  int best = -1;
  for (int r = 0; r < config.restarts; ++r) {
    if (!outcomes[r]) continue;
    if (best < 0 || outcomes[r]->cost < outcomes[best]->cost) best = r;
  }
  if (best < 0) {
    std::string detail = diags.empty() ? "" : diags.front().error;
    throw NoConvergenceError("all restarts failed: " + detail,
                             config.optimizer.max_iter, 0.0);
  }

  // Pull a whitened-coordinate solution back to input coordinates so both
  // modes report comparable subspaces (orth(Z Q) spans the s-projection's
  // row space; its complement is the identified non-stationary span).
  manifold::Subspace s_basis =
      config.whiten
          ? manifold::Subspace::from_span(ctx->whitener * outcomes[best]->point.basis())
          : outcomes[best]->point;
  manifold::Subspace n_basis = manifold::complement(s_basis);

  return GassaResult{std::move(s_basis), std::move(n_basis),
                     outcomes[best]->cost, best, std::move(diags),
                     std::move(ctx), false};
}

spd::SymPosDef project_to_s_space(const manifold::Subspace& q,
                                  const spd::SymPosDef& s) {
  if (q.ambient_dim() != s.dim())
    throw DimMismatchError("subspace and matrix dimensions do not match");
  return spd::SymPosDef(compress(s.matrix(), q.basis()));
}

}  // namespace gassa
