#include "gassa/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gassa/random.hpp"

namespace gassa::manifold {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double fdot(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a.array() * b.array()).sum();
}

void require_point_shape(int ambient_dim, int sub_dim) {
  if (sub_dim <= 0 || sub_dim >= ambient_dim) {
    std::ostringstream msg;
    msg << "subspace dimension must satisfy 0 < m < D, got m = " << sub_dim
        << ", D = " << ambient_dim;
    throw BadDimsError(msg.str());
  }
}

/// Thin QR with the sign of each column fixed so the R diagonal is positive;
/// throws RankDeficientError when a diagonal entry collapses.
Eigen::MatrixXd thin_qr_orthonormal(const Eigen::MatrixXd& span) {
  const int d = static_cast<int>(span.rows());
  const int m = static_cast<int>(span.cols());
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(span);
  Eigen::MatrixXd r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  const double diag_max = r.diagonal().cwiseAbs().maxCoeff();
  if (!(diag_max > 0.0) ||
      r.diagonal().cwiseAbs().minCoeff() <= 1e-12 * diag_max)
    throw RankDeficientError("span matrix is numerically rank deficient");
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, m);
  for (int j = 0; j < m; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace

Subspace::Subspace(const Eigen::MatrixXd& basis) : basis_() {
  require_point_shape(static_cast<int>(basis.rows()),
                      static_cast<int>(basis.cols()));
  Eigen::MatrixXd gram = basis.transpose() * basis;
  gram -= Eigen::MatrixXd::Identity(basis.cols(), basis.cols());
  if (gram.cwiseAbs().maxCoeff() > kOrthTol)
    throw RankDeficientError(
        "basis columns are not orthonormal; use Subspace::from_span to "
        "orthonormalize a spanning set");
  basis_ = basis;
}

Subspace Subspace::from_span(const Eigen::MatrixXd& span) {
  require_point_shape(static_cast<int>(span.rows()),
                      static_cast<int>(span.cols()));
  return Subspace(thin_qr_orthonormal(span), Unchecked{});
}

Subspace unchecked_subspace(Eigen::MatrixXd basis) {
  return Subspace(std::move(basis), Subspace::Unchecked{});
}

Eigen::MatrixXd project_tangent(const Subspace& q, const Eigen::MatrixXd& g) {
  if (g.rows() != q.ambient_dim() || g.cols() != q.sub_dim()) {
    std::ostringstream msg;
    msg << "gradient shape " << g.rows() << "x" << g.cols()
        << " does not match point shape " << q.ambient_dim() << "x"
        << q.sub_dim();
    throw DimMismatchError(msg.str());
  }
  return g - q.basis() * (q.basis().transpose() * g);
}

Subspace retract(const Subspace& q, const Eigen::MatrixXd& delta) {
  if (delta.rows() != q.ambient_dim() || delta.cols() != q.sub_dim()) {
    std::ostringstream msg;
    msg << "tangent shape " << delta.rows() << "x" << delta.cols()
        << " does not match point shape " << q.ambient_dim() << "x"
        << q.sub_dim();
    throw DimMismatchError(msg.str());
  }
  return Subspace::from_span(q.basis() + delta);
}

double grassmann_dist(const Subspace& q1, const Subspace& q2) {
  if (q1.ambient_dim() != q2.ambient_dim() || q1.sub_dim() != q2.sub_dim()) {
    std::ostringstream msg;
    msg << "subspaces live on different manifolds: (" << q1.ambient_dim()
        << ", " << q1.sub_dim() << ") vs (" << q2.ambient_dim() << ", "
        << q2.sub_dim() << ")";
    throw DimMismatchError(msg.str());
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(q1.basis().transpose() * q2.basis());
  double total = 0.0;
  for (int k = 0; k < svd.singularValues().size(); ++k) {
    const double sigma = std::clamp(svd.singularValues()(k), -1.0, 1.0);
    const double theta = std::acos(sigma);
    total += theta * theta;
  }
  return std::sqrt(total);
}

Subspace complement(const Subspace& q) {
  const int d = q.ambient_dim();
  const int m = q.sub_dim();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(q.basis());
  Eigen::MatrixXd full = qr.householderQ();
  return unchecked_subspace(full.rightCols(d - m));
}

Subspace random_subspace(int ambient_dim, int sub_dim, std::uint64_t seed) {
  require_point_shape(ambient_dim, sub_dim);
  Rng rng(seed);
  return Subspace::from_span(gaussian_matrix(ambient_dim, sub_dim, rng));
}

namespace {

/// One truncated-CG (Steihaug-Toint) solve of the trust-region subproblem.
/// Returns the step and its exact model value <g, eta> + 0.5 <eta, H eta>,
/// tracked incrementally so no extra Hessian products are needed.
struct TcgResult {
  Eigen::MatrixXd step;
  double model_value = 0.0;
  bool hit_boundary = false;
};

TcgResult solve_tcg(const Eigen::MatrixXd& grad,
                    const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& hess_vec,
                    double radius, int max_inner) {
  const double grad_norm = grad.norm();
  Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(grad.rows(), grad.cols());
  Eigen::MatrixXd h_eta = eta;
  Eigen::MatrixXd r = grad;
  Eigen::MatrixXd d = -r;
  double r_sq = fdot(r, r);
  const double tol = grad_norm * std::min(grad_norm, 0.1);

  TcgResult out{eta, 0.0, false};
  for (int j = 0; j < max_inner; ++j) {
    Eigen::MatrixXd hd = hess_vec(d);
    const double kappa = fdot(d, hd);
    const double eta_sq = fdot(eta, eta);
    const double eta_d = fdot(eta, d);
    const double d_sq = fdot(d, d);
    if (kappa <= 0.0) {
      // Negative curvature: follow d to the boundary.
      const double disc = eta_d * eta_d + d_sq * (radius * radius - eta_sq);
      const double tau = (-eta_d + std::sqrt(std::max(disc, 0.0))) / d_sq;
      eta += tau * d;
      h_eta += tau * hd;
      out.hit_boundary = true;
      break;
    }
    const double alpha = r_sq / kappa;
    const double next_sq = eta_sq + 2.0 * alpha * eta_d + alpha * alpha * d_sq;
    if (next_sq >= radius * radius) {
      const double disc = eta_d * eta_d + d_sq * (radius * radius - eta_sq);
      const double tau = (-eta_d + std::sqrt(std::max(disc, 0.0))) / d_sq;
      eta += tau * d;
      h_eta += tau * hd;
      out.hit_boundary = true;
      break;
    }
    eta += alpha * d;
    h_eta += alpha * hd;
    r += alpha * hd;
    const double r_sq_next = fdot(r, r);
    if (std::sqrt(r_sq_next) <= tol) break;
    const double beta = r_sq_next / r_sq;
    d = -r + beta * d;
    r_sq = r_sq_next;
  }
  out.step = eta;
  out.model_value = fdot(grad, eta) + 0.5 * fdot(eta, h_eta);
  return out;
}

}  // namespace

MinimizeResult minimize(const CostFn& cost, const EgradFn& egrad,
                        const Subspace& q0, const OptimizerOptions& options) {
  const int m = q0.sub_dim();
  const int manifold_dim = m * (q0.ambient_dim() - m);
  const double radius_scale = std::sqrt(static_cast<double>(m));
  double radius = options.initial_trust_radius > 0.0
                      ? options.initial_trust_radius
                      : 0.1 * radius_scale;
  const double radius_max = options.max_trust_radius > 0.0
                                ? options.max_trust_radius
                                : 2.0 * radius_scale;
  const int max_inner =
      options.max_inner_iter > 0 ? options.max_inner_iter : manifold_dim;
  // Finite-difference step for Hessian-vector products; ||Q||_F = sqrt(m).
  const double fd_h = 1e-5 * (1.0 + radius_scale);

  Subspace q = q0;
  double f = cost(q.basis());
  Eigen::MatrixXd rgrad = project_tangent(q, egrad(q.basis()));
  double grad_norm = rgrad.norm();

  MinimizeResult result{q, f, {}};
  result.stats.cost_trace.push_back(f);

  auto hess_vec = [&](const Eigen::MatrixXd& v) -> Eigen::MatrixXd {
    if (!options.use_finite_diff_hessian) return v;
    const double v_norm = v.norm();
    if (v_norm == 0.0) return v;
    const Eigen::MatrixXd unit = v / v_norm;
    Subspace plus = retract(q, fd_h * unit);
    Subspace minus = retract(q, -fd_h * unit);
    Eigen::MatrixXd g_plus = project_tangent(plus, egrad(plus.basis()));
    Eigen::MatrixXd g_minus = project_tangent(minus, egrad(minus.basis()));
    Eigen::MatrixXd diff = project_tangent(q, g_plus - g_minus);
    return (v_norm / (2.0 * fd_h)) * diff;
  };

  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    if (grad_norm <= options.grad_tol) {
      result.stats.converged = true;
      break;
    }
    if (radius <= 1e-13 * radius_scale) {
      result.stats.flag = "trust_region_collapse";
      break;
    }

    TcgResult tcg = solve_tcg(rgrad, hess_vec, radius, max_inner);
    const double predicted = -tcg.model_value;

    double f_new = kInf;
    bool candidate_ok = false;
    Subspace q_new = q;
    if (tcg.step.norm() > 0.0) {
      try {
        q_new = retract(q, tcg.step);
        f_new = cost(q_new.basis());
        candidate_ok = std::isfinite(f_new);
      } catch (const Error&) {
        candidate_ok = false;  // step ran into an invalid region; reject it
      }
    }

    const double rho_reg = 1e-12 * std::max(1.0, std::abs(f));
    const double rho = candidate_ok && predicted > 0.0
                           ? (f - f_new + rho_reg) / (predicted + rho_reg)
                           : -1.0;

    if (rho > 0.1 && candidate_ok && f_new <= f) {
      q = q_new;
      f = f_new;
      rgrad = project_tangent(q, egrad(q.basis()));
      grad_norm = rgrad.norm();
    }
    result.stats.cost_trace.push_back(f);

    if (rho < 0.25) {
      radius *= 0.25;
    } else if (rho > 0.75 && tcg.hit_boundary) {
      radius = std::min(2.0 * radius, radius_max);
    }
  }

  if (iter == options.max_iter && !result.stats.converged)
    result.stats.flag = "max_iter";
  result.point = q;
  result.cost = f;
  result.stats.iterations = iter;
  result.stats.final_grad_norm = grad_norm;
  return result;
}

}  // namespace gassa::manifold
