#include "gassa/ssa.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gassa/parallel.hpp"
#include "gassa/random.hpp"

namespace gassa::ssa {

namespace {

using spd::SymPosDef;

/// Ledoit-Wolf-style analytic shrinkage intensity toward the scaled
/// identity target tr(S)/D * I.
double analytic_intensity(const Eigen::MatrixXd& centered, const Eigen::MatrixXd& s) {
  const int t = static_cast<int>(centered.rows());
  const int d = static_cast<int>(centered.cols());
  const double mu = s.trace() / d;
  Eigen::MatrixXd target = mu * Eigen::MatrixXd::Identity(d, d);
  const double dispersion = (s - target).squaredNorm() / d;
  if (dispersion <= 0.0) return 1.0;
  double scatter = 0.0;
  for (int i = 0; i < t; ++i) {
    Eigen::MatrixXd outer = centered.row(i).transpose() * centered.row(i);
    scatter += (outer - s).squaredNorm();
  }
  scatter /= static_cast<double>(t) * t * d;
  const double rho = std::min(dispersion, scatter) / dispersion;
  return std::clamp(rho, 0.0, 1.0);
}

}  // namespace

EpochStats epoch_stats(const Eigen::Ref<const Eigen::MatrixXd>& segment,
                       const CovEstimator& estimator, int index) {
  const int t = static_cast<int>(segment.rows());
  const int d = static_cast<int>(segment.cols());
  if (t < 2)
    throw DegenerateSegmentError("segment must contain at least 2 samples");
  if (d < 1) throw BadDimsError("segment must have at least one channel");

  Eigen::VectorXd mean = segment.colwise().mean();
  Eigen::MatrixXd centered = segment.rowwise() - mean.transpose();
  const double norm = estimator.unbiased ? t - 1.0 : static_cast<double>(t);
  Eigen::MatrixXd s = (centered.transpose() * centered) / norm;
  s = 0.5 * (s + s.transpose());

  if (estimator.kind == CovEstimator::Kind::kEmpirical) {
    if (t < d + 1) {
      std::ostringstream msg;
      msg << "empirical covariance needs T >= D + 1 after mean centering, got "
          << "T = " << t << ", D = " << d << " (enable shrinkage)";
      throw DegenerateSegmentError(msg.str());
    }
    try {
      return EpochStats{index, std::move(mean), SymPosDef(s), t};
    } catch (const NotSpdError& e) {
      throw DegenerateSegmentError(
          std::string("segment covariance is not positive definite (zero "
                      "variance direction?): ") +
          e.what());
    }
  }

  double rho;
  if (estimator.intensity.has_value()) {
    rho = *estimator.intensity;
    if (!(rho > 0.0) || rho > 1.0)
      throw ConfigError("shrinkage intensity must lie in (0, 1]");
  } else {
    rho = analytic_intensity(centered, s);
  }
  const double mu = s.trace() / d;
  const double nu = mu > 0.0 ? mu : 1.0;  // degenerate target scale fallback
  Eigen::MatrixXd shrunk =
      (1.0 - rho) * s + rho * nu * Eigen::MatrixXd::Identity(d, d);
  return EpochStats{index, std::move(mean), SymPosDef(shrunk), t};
}

namespace {

void require_epochs(std::span<const EpochStats> epochs) {
  if (epochs.empty()) throw InsufficientDataError("empty epoch list");
  const int d = static_cast<int>(epochs.front().mean.size());
  for (const auto& e : epochs) {
    if (e.mean.size() != d || e.cov.dim() != d)
      throw DimMismatchError("epoch statistics mix dimensions");
  }
}

/// Cost on a column basis Q (D x m) over pre-whitened, centered stats;
/// smooth in Q and defined for any full-column-rank Q.
double kl_cost_impl(const Eigen::MatrixXd& q,
                    const std::vector<Eigen::MatrixXd>& covs,
                    const std::vector<Eigen::VectorXd>& means) {
  const int m = static_cast<int>(q.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < covs.size(); ++i) {
    Eigen::MatrixXd s = q.transpose() * (covs[i] * q);
    s = 0.5 * (s + s.transpose());
    Eigen::VectorXd mu = q.transpose() * means[i];
    total += 0.5 * (s.trace() - spd::detail::logdet(s) + mu.squaredNorm() - m);
  }
  return total;
}

Eigen::MatrixXd kl_egrad_impl(const Eigen::MatrixXd& q,
                              const std::vector<Eigen::MatrixXd>& covs,
                              const std::vector<Eigen::VectorXd>& means) {
  const int m = static_cast<int>(q.cols());
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  for (std::size_t i = 0; i < covs.size(); ++i) {
    Eigen::MatrixXd s = q.transpose() * (covs[i] * q);
    s = 0.5 * (s + s.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success)
      throw NotSpdError("compressed epoch covariance is not positive definite");
    Eigen::MatrixXd s_inv = llt.solve(Eigen::MatrixXd::Identity(m, m));
    grad += covs[i] * q * (Eigen::MatrixXd::Identity(m, m) - s_inv) +
            means[i] * (means[i].transpose() * q);
  }
  return grad;
}

}  // namespace

double ssa_cost(const Eigen::MatrixXd& b_rows, std::span<const EpochStats> epochs,
                const Eigen::MatrixXd& z) {
  require_epochs(epochs);
  const int d = static_cast<int>(epochs.front().mean.size());
  const int m = static_cast<int>(b_rows.rows());
  if (b_rows.cols() != d)
    throw DimMismatchError("projection column count does not match data dimension");
  if (m <= 0 || m >= d)
    throw BadDimsError("projection must keep 0 < m < D rows");
  if (z.rows() != d || z.cols() != d)
    throw DimMismatchError("whitener must be D x D");
  Eigen::MatrixXd gram = b_rows * b_rows.transpose();
  if ((gram - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() > 1e-8)
    throw RankDeficientError("projection rows must be orthonormal");

  std::vector<Eigen::MatrixXd> covs;
  std::vector<Eigen::VectorXd> means;
  covs.reserve(epochs.size());
  means.reserve(epochs.size());
  for (const auto& e : epochs) {
    covs.push_back(z * e.cov.matrix() * z);
    means.push_back(z * e.mean);
  }
  return kl_cost_impl(b_rows.transpose(), covs, means);
}

SsaResult fit_ssa(std::span<const EpochStats> epochs, const SsaConfig& config) {
  if (epochs.size() < 2)
    throw InsufficientDataError("need at least two epochs to detect non-stationarity");
  require_epochs(epochs);
  const int d = static_cast<int>(epochs.front().mean.size());
  const int n = static_cast<int>(epochs.size());
  if (config.m <= 0 || config.m >= d) {
    std::ostringstream msg;
    msg << "subspace dimension m = " << config.m
        << " must satisfy 0 < m < D = " << d;
    throw BadDimsError(msg.str());
  }
  if (config.restarts < 1) throw ConfigError("restarts must be at least 1");
  const int m = config.m;

  // Pooled covariance of the concatenated record (equal-length epochs):
  // mean of epoch covariances plus the scatter of epoch means.
  Eigen::VectorXd grand_mean = Eigen::VectorXd::Zero(d);
  for (const auto& e : epochs) grand_mean += e.mean;
  grand_mean /= n;
  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(d, d);
  for (const auto& e : epochs) {
    Eigen::VectorXd dev = e.mean - grand_mean;
    pooled += e.cov.matrix() + dev * dev.transpose();
  }
  pooled /= n;
  auto [pooled_sqrt, z] = spd::sqrt_and_inv_sqrt(SymPosDef(pooled));

  std::vector<Eigen::MatrixXd> covs;
  std::vector<Eigen::VectorXd> means;
  covs.reserve(epochs.size());
  means.reserve(epochs.size());
  for (const auto& e : epochs) {
    Eigen::MatrixXd w = z.matrix() * e.cov.matrix() * z.matrix();
    covs.push_back(0.5 * (w + w.transpose()));
    means.push_back(z.matrix() * (e.mean - grand_mean));
  }

  const auto cost_fn = [&](const Eigen::MatrixXd& q) {
    return kl_cost_impl(q, covs, means);
  };
  const auto egrad_fn = [&](const Eigen::MatrixXd& q) {
    return kl_egrad_impl(q, covs, means);
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

  const Eigen::MatrixXd q_hat = outcomes[best]->point.basis();
  manifold::Subspace w_comp = manifold::complement(outcomes[best]->point);
  // Estimated non-stationary mixing directions in input coordinates:
  // the de-mixing is B Z, so the mixing columns are Z^{-1} B^T; its last
  // D - m columns span the n-space.
  manifold::Subspace n_basis =
      manifold::Subspace::from_span(pooled_sqrt.matrix() * w_comp.basis());

  return SsaResult{q_hat.transpose(),
                   q_hat.transpose() * z.matrix(),
                   std::move(n_basis),
                   z.matrix(),
                   outcomes[best]->cost,
                   best,
                   std::move(diags)};
}

}  // namespace gassa::ssa
