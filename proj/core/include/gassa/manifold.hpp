#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gassa/errors.hpp"

namespace gassa::manifold {

/// Orthonormality tolerance enforced at Subspace construction:
/// ||Q^T Q - I||_max <= kOrthTol.
inline constexpr double kOrthTol = 1e-10;

/// A point on the Grassmann manifold: an m-dimensional subspace of R^D,
/// represented by a D x m matrix with orthonormal columns. Only the column
/// span is meaningful; all costs optimized over Subspace are required to be
/// invariant to right-rotations of the basis.
class Subspace {
 public:
  /// Validates orthonormality to kOrthTol; throws RankDeficientError
  /// otherwise and BadDimsError unless 0 < m < D.
  explicit Subspace(const Eigen::MatrixXd& basis);

  /// Orthonormalizes an arbitrary full-column-rank D x m matrix (QR with the
  /// sign convention of a positive R diagonal). Throws RankDeficientError if
  /// the columns are numerically dependent.
  static Subspace from_span(const Eigen::MatrixXd& span);

  const Eigen::MatrixXd& basis() const noexcept { return basis_; }
  int ambient_dim() const noexcept { return static_cast<int>(basis_.rows()); }
  int sub_dim() const noexcept { return static_cast<int>(basis_.cols()); }

 private:
  struct Unchecked {};
  Subspace(Eigen::MatrixXd basis, Unchecked) : basis_(std::move(basis)) {}

  Eigen::MatrixXd basis_;

  friend Subspace unchecked_subspace(Eigen::MatrixXd basis);
};

/// Internal fast path for bases already known to be orthonormal.
Subspace unchecked_subspace(Eigen::MatrixXd basis);

/// A tangent vector at a point: delta satisfies at^T delta = 0.
struct TangentVector {
  Subspace at;
  Eigen::MatrixXd delta;
};

/// Projects an ambient (Euclidean) gradient onto the horizontal space at q:
/// delta = g - q (q^T g).
Eigen::MatrixXd project_tangent(const Subspace& q, const Eigen::MatrixXd& g);

/// Moves along a tangent direction and re-orthonormalizes (QR retraction
/// with positive R diagonal).
Subspace retract(const Subspace& q, const Eigen::MatrixXd& delta);

/// Geodesic distance: sqrt of the sum of squared principal angles between
/// the two spans (singular values of q1^T q2, clamped to [-1, 1], arccos).
double grassmann_dist(const Subspace& q1, const Subspace& q2);

/// Orthonormal basis of the orthogonal complement (D x (D - m)).
Subspace complement(const Subspace& q);

/// Uniformly (rotation-invariantly) distributed random subspace: orthonormal
/// factor of a D x m standard Gaussian matrix.
Subspace random_subspace(int ambient_dim, int sub_dim, std::uint64_t seed);

/// Knobs for the Riemannian trust-region solver.
struct OptimizerOptions {
  int max_iter = 200;
  double grad_tol = 1e-6;
  /// <= 0 means "choose from the manifold dimension" (0.1 * sqrt(m) initial,
  /// 2 * sqrt(m) max).
  double initial_trust_radius = 0.0;
  double max_trust_radius = 0.0;
  /// When true, Hessian-vector products are taken by central finite
  /// differences of the Riemannian gradient; when false the model Hessian is
  /// the identity and the solver degrades to a first-order method.
  bool use_finite_diff_hessian = true;
  /// Inner (truncated conjugate gradient) iteration cap; <= 0 means the
  /// manifold dimension.
  int max_inner_iter = 0;
};

/// Convergence diagnostics. `flag` is empty on a clean gradient-tolerance
/// exit, "max_iter" when the iteration budget ran out, and
/// "trust_region_collapse" when the radius shrank to numerical zero first.
struct OptStats {
  int iterations = 0;
  double final_grad_norm = 0.0;
  std::vector<double> cost_trace;
  bool converged = false;
  std::string flag;
};

/// Result of minimize: the point reached, its cost, and diagnostics.
struct MinimizeResult {
  Subspace point;
  double cost = 0.0;
  OptStats stats;
};

using CostFn = std::function<double(const Eigen::MatrixXd&)>;
using EgradFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

/// Riemannian trust-region minimization of a smooth, right-rotation
/// invariant cost over the Grassmann manifold. `cost` and `egrad` are
/// evaluated on basis matrices (egrad is the plain Euclidean gradient; the
/// projection to the horizontal space happens inside). Never returns a point
/// with cost above the starting point's.
MinimizeResult minimize(const CostFn& cost, const EgradFn& egrad,
                        const Subspace& q0, const OptimizerOptions& options = {});

}  // namespace gassa::manifold
