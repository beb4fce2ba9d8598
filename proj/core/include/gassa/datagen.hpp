#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gassa/spd.hpp"
#include "gassa/ssa.hpp"

namespace gassa::datagen {

/// Scale knobs of the synthetic model. The defaults balance the energy of
/// the stationary and non-stationary parts: coupling entries C_i ~
/// N(0, 1/m) (standard deviation 1/sqrt(m)), epoch mean shifts ~ N(0, 1),
/// source eigenvalues uniform in [0.5, 2].
struct GenScales {
  double eig_min = 0.5;
  double eig_max = 2.0;
  /// Standard deviation of the coupling entries; a negative value means the
  /// default 1/sqrt(m). Zero disables coupling (block-diagonal sources).
  double c_scale = -1.0;
  /// Standard deviation of the epoch mean shifts of the non-stationary part.
  double mu_scale = 1.0;
  /// When true all epochs share one non-stationary covariance (the only
  /// non-stationarity left comes from the coupling and the mean shifts).
  bool constant_lambda_n = false;
  /// When true the mixing transformation is a random rotation instead of
  /// the default uniform column-normalized matrix.
  bool orthogonal_mixing = false;
};

/// Ground truth of one synthetic dataset: mixing transformation, stationary
/// source covariance, and the per-epoch non-stationary parameters.
struct MixingModel {
  Eigen::MatrixXd a;  // D x D mixing, unit-norm columns
  /// m x m stationary source covariance (placeholder until populated;
  /// a default-constructed model fails validate()).
  spd::SymPosDef lambda_s = spd::SymPosDef::identity(1);
  std::vector<Eigen::MatrixXd> c;         // (D-m) x m coupling per epoch
  std::vector<Eigen::VectorXd> mu;        // length D-m mean shift per epoch
  std::vector<spd::SymPosDef> lambda_n;   // (D-m) x (D-m) covariance per epoch
  int epochs = 0;                         // N
  int epoch_len = 0;                      // T
  std::uint64_t seed = 0;

  int ambient_dim() const { return static_cast<int>(a.rows()); }
  int s_dim() const { return lambda_s.dim(); }

  /// Throws on inconsistent sizes, non-unit mixing columns, or an
  /// ill-conditioned mixing transformation.
  void validate() const;
};

/// Mixed observations plus their generator.
struct SignalSet {
  Eigen::MatrixXd samples;  // (N*T) x D, one time sample per row
  int epoch_len = 0;
  MixingModel ground_truth;
};

/// Random mixing transformation: i.i.d. uniform [-0.5, 0.5] entries,
/// columns normalized to unit length, resampled (up to 100 attempts) until
/// the condition number is at most 1e6. Throws GenerationFailureError if no
/// attempt qualifies.
Eigen::MatrixXd gen_mixing(int dim, std::uint64_t seed);

/// Random SPD matrix B diag(gamma) B^T with B the orthonormal factor of a
/// Gaussian matrix and gamma i.i.d. uniform in [eig_min, eig_max].
spd::SymPosDef gen_random_spd(int dim, std::uint64_t seed, double eig_min = 0.5,
                              double eig_max = 2.0);

/// Draws a complete synthetic model: mixing, stationary covariance, and
/// per-epoch non-stationary parameters, all derived from `seed`.
MixingModel make_model(int dim, int m, int epochs, int epoch_len,
                       std::uint64_t seed, const GenScales& scales = {});

/// Closed-form covariance of the (unmixed) sources in epoch i:
///   [ L_s          (C_i L_s)^T        ]
///   [ C_i L_s      C_i L_s C_i^T + L_n_i ]
spd::SymPosDef source_cov(const MixingModel& model, int i);

/// Closed-form covariance of the mixed observations in epoch i:
/// A source_cov(i) A^T.
spd::SymPosDef mixed_cov(const MixingModel& model, int i);

/// Orthonormal basis of the true stationary projection's row space (the
/// first m rows of A^{-1}).
manifold::Subspace true_s_projection(const MixingModel& model);

/// Orthonormal basis of the true n-space: the span of the last D - m
/// columns of A.
manifold::Subspace true_n_space(const MixingModel& model);

/// Draws the mixed signals: per epoch, stationary sources ~ N(0, L_s),
/// non-stationary part C_i s^s + Y with Y ~ N(mu_i, L_n_i), mixed by A.
/// Deterministic given the model (epoch draws use per-epoch derived seeds).
SignalSet gen_signals(const MixingModel& model);

/// Splits samples into (possibly overlapping) epochs of length t with
/// stride t * (1 - overlap_fraction); a trailing partial window is dropped.
/// The returned blocks are views into `samples`.
std::vector<Eigen::Ref<const Eigen::MatrixXd>> split_epochs(
    const Eigen::MatrixXd& samples, int t, double overlap_fraction = 0.0);

/// Covariance of one segment under the chosen estimator. Shares its
/// implementation with ssa::epoch_stats.
spd::SymPosDef estimate_cov(const Eigen::Ref<const Eigen::MatrixXd>& segment,
                            const ssa::CovEstimator& estimator = {});

namespace detail {

/// The raw (pre-normalization) uniform draw behind gen_mixing's first
/// attempt, exposed so distribution tests can reach the entry marginal.
Eigen::MatrixXd uniform_mixing_entries(int rows, int cols, std::uint64_t seed);

}  // namespace detail

}  // namespace gassa::datagen
