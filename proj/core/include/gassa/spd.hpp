#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gassa/errors.hpp"

namespace gassa::spd {

/// Relative eigenvalue floor below which a matrix is rejected as not
/// positive definite: lambda_min must exceed spd_floor * lambda_max.
inline constexpr double kSpdFloor = 1e-12;

/// Relative asymmetry tolerance at construction:
/// max |S_ij - S_ji| <= kSymTol * ||S||_F.
inline constexpr double kSymTol = 1e-10;

/// Condition-number cap for congruence/whitening transforms.
inline constexpr double kCondCap = 1e12;

/// Which SPD geometry a distance, mean, or solver uses.
enum class MetricKind { kAirm, kStein };

/// A validated symmetric positive definite matrix. Construction checks
/// symmetry to kSymTol and positive definiteness against kSpdFloor, then
/// stores the symmetrized entries; failures throw NotSpdError rather than
/// silently regularizing (see add_ridge for the explicit repair).
class SymPosDef {
 public:
  /// Validates and symmetrizes. Throws NotSpdError on asymmetric or
  /// non-positive-definite input, DimMismatchError on a non-square one.
  explicit SymPosDef(const Eigen::MatrixXd& entries);

  static SymPosDef identity(int dim);

  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  int dim() const noexcept { return static_cast<int>(matrix_.rows()); }

 private:
  struct Unchecked {};
  SymPosDef(Eigen::MatrixXd entries, Unchecked) : matrix_(std::move(entries)) {}

  Eigen::MatrixXd matrix_;

  friend SymPosDef unchecked_spd(Eigen::MatrixXd entries);
};

/// Internal fast path: wraps entries already known to be symmetric positive
/// definite (outputs of validated computations) without re-validating.
SymPosDef unchecked_spd(Eigen::MatrixXd entries);

/// S + epsilon * I. The explicit repair for inputs that fail the SPD floor;
/// epsilon must be positive.
SymPosDef add_ridge(const Eigen::MatrixXd& entries, double epsilon);

/// Matrix logarithm of an SPD matrix (a symmetric matrix).
Eigen::MatrixXd spd_log(const SymPosDef& s);

/// Matrix exponential of a symmetric matrix (an SPD matrix).
SymPosDef spd_exp(const Eigen::MatrixXd& sym);

/// (S^{1/2}, S^{-1/2}) from a single eigendecomposition.
std::pair<SymPosDef, SymPosDef> sqrt_and_inv_sqrt(const SymPosDef& s);

/// Squared affine-invariant Riemannian distance:
/// sum of squared log generalized eigenvalues of the pencil (y, x).
double airm_dist2(const SymPosDef& x, const SymPosDef& y);

/// Stein (symmetric, Jensen-Bregman log-det) divergence:
/// logdet((x + y)/2) - logdet(x y)/2. Its square root is a metric.
double stein_div(const SymPosDef& x, const SymPosDef& y);

/// Squared distance in the chosen geometry: airm_dist2 for AIRM, stein_div
/// (already a squared-distance-like quantity) for Stein.
double dist2(MetricKind metric, const SymPosDef& x, const SymPosDef& y);

/// Options shared by the iterative mean routines.
struct MeanOptions {
  double tol = 1e-10;
  int max_iter = 100;
};

/// Karcher (Fréchet) mean in the AIRM geometry via the fixed-point
/// iteration on the matrix exponential of the mean log. Initialized at the
/// arithmetic mean; converged when the summed log-map residual norm is at
/// most tol * N. Throws NoConvergenceError past max_iter.
SymPosDef karcher_mean(std::span<const SymPosDef> set, const MeanOptions& options = {});

/// Fréchet mean in the Stein geometry via the Picard iteration
/// X <- [ (1/N) sum ((X + S_i)/2)^{-1} ]^{-1}, converged when the Stein-cost
/// gradient norm is at most tol * N.
SymPosDef stein_mean(std::span<const SymPosDef> set, const MeanOptions& options = {});

/// Metric-matched mean: karcher_mean for AIRM, stein_mean for Stein.
SymPosDef mean(MetricKind metric, std::span<const SymPosDef> set,
               const MeanOptions& options = {});

/// Congruence transform P^T X P, re-symmetrized. Throws
/// SingularTransformError if cond(P) exceeds kCondCap.
SymPosDef congruence(const Eigen::MatrixXd& p, const SymPosDef& x);

/// The mean and whitening transform produced by whiten_set, kept so results
/// computed in whitened coordinates can be mapped back.
struct WhiteningContext {
  SymPosDef mean;
  Eigen::MatrixXd whitener;   // Z = mean^{-1/2}, symmetric
  MetricKind metric;
};

/// Whitens a set by the inverse square root of its metric-matched mean:
/// returns { Z S_i Z } and the context (Z maps the mean to the identity).
std::pair<std::vector<SymPosDef>, WhiteningContext> whiten_set(
    std::span<const SymPosDef> set, MetricKind metric,
    const MeanOptions& options = {});

namespace detail {

/// Eigendecomposition of a symmetric matrix with pre-symmetrization
/// ((S + S^T)/2 before factorizing). Throws on solver failure.
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sym_eig(const Eigen::MatrixXd& s);

/// log det of an SPD matrix via the Cholesky factor diagonal.
/// Throws NotSpdError if the factorization fails.
double logdet(const Eigen::MatrixXd& s);

/// Squared distances on raw matrices (assumed symmetric positive definite);
/// the fast path used inside solver loops. Near-singular input surfaces as
/// NotSpdError.
double airm_dist2_raw(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);
double stein_div_raw(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);
double dist2_raw(MetricKind metric, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

}  // namespace detail

}  // namespace gassa::spd
