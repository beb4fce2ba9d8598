#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gassa/gassa.hpp"
#include "gassa/manifold.hpp"
#include "gassa/spd.hpp"

namespace gassa::ssa {

/// Covariance estimator settings shared by epoch_stats and
/// datagen::estimate_cov.
struct CovEstimator {
  enum class Kind { kEmpirical, kShrinkage };
  Kind kind = Kind::kEmpirical;
  /// Shrinkage intensity in [0, 1]; unset means the analytic
  /// (Ledoit-Wolf-style) choice. Ignored for the empirical estimator.
  std::optional<double> intensity{};
  /// When true, normalize by T - 1 instead of the default 1/T.
  bool unbiased = false;
};

/// Empirical mean and covariance of one epoch.
struct EpochStats {
  int index = 0;
  Eigen::VectorXd mean;
  spd::SymPosDef cov;
  int length = 0;  // T, number of samples
};

/// Statistics of a T x D sample block (rows are time samples). The
/// empirical estimator requires T >= D + 1 (mean-centering costs one rank)
/// and positive variance in every direction; shrinkage lifts both
/// restrictions. Throws DegenerateSegmentError when it cannot produce an
/// SPD covariance without shrinkage.
EpochStats epoch_stats(const Eigen::Ref<const Eigen::MatrixXd>& segment,
                       const CovEstimator& estimator = {}, int index = 0);

/// The stationarity cost of a candidate projection with orthonormal rows
/// B_rows (m x D): the summed Kullback-Leibler divergence
///   sum_i KL[ N(mu_i^s, Sigma_i^s) || N(0, I) ]
///     = sum_i 0.5 (tr Sigma_i^s - log det Sigma_i^s + mu_i^s' mu_i^s - m)
/// of the projected, whitened epoch statistics: mu^s = B Z mu,
/// Sigma^s = B Z Sigma Z B'. Epoch means are interpreted as deviations from
/// the global mean (center them first; fit_ssa does). Pass Z = I for stats
/// that are already whitened.
double ssa_cost(const Eigen::MatrixXd& b_rows, std::span<const EpochStats> epochs,
                const Eigen::MatrixXd& z);

/// Configuration for fit_ssa; mirrors the gaSSA restart protocol.
struct SsaConfig {
  int m = 1;
  int restarts = 5;
  std::uint64_t seed = 0;
  manifold::OptimizerOptions optimizer{};
  int threads = 1;
};

/// Result of fit_ssa. `rotation` is the orthonormal-row projection in
/// whitened coordinates (the first m rows of the orthogonal de-mixing);
/// `projection` = rotation * Z is the extractor that maps raw, centered
/// samples to estimated stationary sources; `n_basis` spans the estimated
/// non-stationary mixing directions in input coordinates (the last D - m
/// columns of Z^{-1} times the de-mixing transpose).
struct SsaResult {
  Eigen::MatrixXd rotation;    // m x D, orthonormal rows
  Eigen::MatrixXd projection;  // m x D, full row rank
  manifold::Subspace n_basis;  // D x (D - m)
  Eigen::MatrixXd whitener;    // Z, D x D symmetric
  double cost = 0.0;
  int best_restart = -1;       // index into restarts
  std::vector<RestartDiag> restarts;
};

/// Stationary subspace analysis baseline: whitens by the pooled empirical
/// covariance (epoch-mean of covariances plus the scatter of epoch means),
/// then minimizes ssa_cost over the row span of the projection with the
/// same multi-restart trust-region protocol as gassa::fit. Deterministic
/// given (epochs, config).
SsaResult fit_ssa(std::span<const EpochStats> epochs, const SsaConfig& config);

}  // namespace gassa::ssa
