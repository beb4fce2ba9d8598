#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gassa/manifold.hpp"
#include "gassa/spd.hpp"

namespace gassa {

/// How the solver obtains gradients of the subspace cost.
enum class GradientMode {
  kAnalytic,          // closed form (default)
  kFiniteDifference,  // central differences on the cost; 2*D*m evaluations
};

/// Configuration for fit().
struct GassaConfig {
  int m = 1;                                   // stationary subspace dimension
  spd::MetricKind metric = spd::MetricKind::kAirm;
  bool whiten = false;
  int restarts = 5;
  std::uint64_t seed = 0;
  GradientMode gradient_mode = GradientMode::kAnalytic;
  manifold::OptimizerOptions optimizer{};
  spd::MeanOptions mean_options{};
  int threads = 1;  // restart-level parallelism; 0 = hardware concurrency

  /// Throws ConfigError / BadDimsError on invalid settings given the
  /// ambient dimension.
  void validate(int ambient_dim) const;
};

/// Outcome of one random restart.
struct RestartDiag {
  std::uint64_t seed = 0;
  double cost = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string flag;   // optimizer flag ("", "max_iter", "trust_region_collapse")
  bool failed = false;
  std::string error;  // category + message when failed
  std::vector<double> cost_trace;  // cost after each accepted outer iteration
};

/// Result of fit(). Both bases live in the coordinates of the input
/// covariance matrices: when whitening is enabled the optimizer's solution
/// Q_w is pulled back through the whitener as s_basis = orth(Z Q_w), so that
/// whitened and unwhitened runs are directly comparable.
struct GassaResult {
  manifold::Subspace s_basis;  // D x m, estimated stationary subspace
  manifold::Subspace n_basis;  // D x (D-m), its orthogonal complement
  double cost = 0.0;           // best cost across restarts
  int best_restart = -1;       // index into restarts (-1 when degenerate)
  std::vector<RestartDiag> restarts;
  std::optional<spd::WhiteningContext> whitening;  // set when whiten = true
  bool degenerate_fully_stationary = false;
};

/// The gaSSA cost at an orthonormal basis: the sum over the set of squared
/// distances (in the chosen geometry) between the compressed covariances
/// Q^T S_i Q and the compressed anchor Q^T anchor Q.
double cost(const manifold::Subspace& q, std::span<const spd::SymPosDef> covs,
            const spd::SymPosDef& anchor, spd::MetricKind metric);

/// The same cost extended smoothly to arbitrary full-column-rank bases,
/// used by finite-difference checks and the optimizer's off-manifold probes.
double cost(const Eigen::MatrixXd& q_basis, std::span<const spd::SymPosDef> covs,
            const spd::SymPosDef& anchor, spd::MetricKind metric);

/// Euclidean gradient of the extended cost with respect to the basis
/// entries (D x m). With GradientMode::kFiniteDifference the gradient is
/// taken by central differences with step 1e-6.
Eigen::MatrixXd euclidean_gradient(const Eigen::MatrixXd& q_basis,
                                   std::span<const spd::SymPosDef> covs,
                                   const spd::SymPosDef& anchor,
                                   spd::MetricKind metric,
                                   GradientMode mode = GradientMode::kAnalytic);

/// Estimates the stationary subspace of a set of covariance matrices by
/// trust-region minimization of the gaSSA cost from `restarts` random
/// starting points (seeds config.seed + restart index; ties in final cost
/// break toward the lower restart index). Deterministic given (covs, config).
GassaResult fit(std::span<const spd::SymPosDef> covs, const GassaConfig& config);

/// Compression of an SPD matrix onto a subspace: Q^T S Q (validated SPD).
spd::SymPosDef project_to_s_space(const manifold::Subspace& q,
                                  const spd::SymPosDef& s);

}  // namespace gassa
