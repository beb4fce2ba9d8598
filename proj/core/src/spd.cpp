#include "gassa/spd.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace gassa::spd {

namespace {

void require_square(const Eigen::MatrixXd& s, const char* what) {
  if (s.rows() != s.cols()) {
    std::ostringstream msg;
    msg << what << " must be square, got " << s.rows() << "x" << s.cols();
    throw DimMismatchError(msg.str());
  }
}

void require_same_dim(const SymPosDef& x, const SymPosDef& y) {
  if (x.dim() != y.dim()) {
    std::ostringstream msg;
    msg << "operands have different dimensions: " << x.dim() << " vs " << y.dim();
    throw DimMismatchError(msg.str());
  }
}

void require_uniform_dims(std::span<const SymPosDef> set) {
  if (set.empty()) throw InsufficientDataError("empty covariance set");
  for (const auto& s : set) {
    if (s.dim() != set.front().dim()) {
      std::ostringstream msg;
      msg << "covariance set mixes dimensions " << set.front().dim() << " and "
          << s.dim();
      throw DimMismatchError(msg.str());
    }
  }
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& s) {
  return 0.5 * (s + s.transpose());
}

}  // namespace

SymPosDef::SymPosDef(const Eigen::MatrixXd& entries) : matrix_() {
  require_square(entries, "SPD matrix");
  if (entries.rows() == 0) throw BadDimsError("SPD matrix must be non-empty");
  const double fro = entries.norm();
  const double asym = (entries - entries.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymTol * fro) {
    std::ostringstream msg;
    msg << "matrix is not symmetric: max asymmetry " << asym << " exceeds "
        << kSymTol << " * ||S||_F = " << kSymTol * fro;
    throw NotSpdError(msg.str());
  }
  matrix_ = symmetrized(entries);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(matrix_,
                                                     Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success)
    throw NotSpdError("eigendecomposition failed during SPD validation");
  const double lambda_min = eig.eigenvalues().minCoeff();
  const double lambda_max = eig.eigenvalues().maxCoeff();
  if (!(lambda_max > 0.0) || !(lambda_min > kSpdFloor * lambda_max)) {
    std::ostringstream msg;
    msg << "matrix is not positive definite: lambda_min = " << lambda_min
        << ", floor = " << kSpdFloor * lambda_max;
    throw NotSpdError(msg.str());
  }
}

SymPosDef SymPosDef::identity(int dim) {
  if (dim <= 0) throw BadDimsError("identity dimension must be positive");
  return SymPosDef(Eigen::MatrixXd::Identity(dim, dim), Unchecked{});
}

SymPosDef unchecked_spd(Eigen::MatrixXd entries) {
  return SymPosDef(std::move(entries), SymPosDef::Unchecked{});
}

SymPosDef add_ridge(const Eigen::MatrixXd& entries, double epsilon) {
  require_square(entries, "ridge input");
  if (!(epsilon > 0.0)) throw ConfigError("ridge epsilon must be positive");
  Eigen::MatrixXd repaired =
      symmetrized(entries) +
      epsilon * Eigen::MatrixXd::Identity(entries.rows(), entries.cols());
  return SymPosDef(repaired);
}

namespace detail {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sym_eig(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrized(s));
  if (eig.info() != Eigen::Success)
    throw NotSpdError("symmetric eigendecomposition failed");
  return eig;
}

double logdet(const Eigen::MatrixXd& s) {
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success)
    throw NotSpdError("Cholesky factorization failed (matrix not positive definite)");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

double airm_dist2_raw(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> geig(
      symmetrized(y), symmetrized(x), Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (geig.info() != Eigen::Success)
    throw NotSpdError("generalized eigendecomposition failed (operand not positive definite)");
  double total = 0.0;
  for (int k = 0; k < geig.eigenvalues().size(); ++k) {
    const double lambda = geig.eigenvalues()(k);
    if (!(lambda > 0.0))
      throw NotSpdError("non-positive generalized eigenvalue in AIRM distance");
    const double l = std::log(lambda);
    total += l * l;
  }
  return total;
}

double stein_div_raw(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  return logdet(0.5 * (x + y)) - 0.5 * (logdet(x) + logdet(y));
}

double dist2_raw(MetricKind metric, const Eigen::MatrixXd& x,
                 const Eigen::MatrixXd& y) {
  return metric == MetricKind::kAirm ? airm_dist2_raw(x, y) : stein_div_raw(x, y);
}

}  // namespace detail

Eigen::MatrixXd spd_log(const SymPosDef& s) {
  auto eig = detail::sym_eig(s.matrix());
  Eigen::ArrayXd lambda = eig.eigenvalues().array();
  // The exact logarithm is symmetric; scrub the rounding asymmetry of the
  // V L V^T product so downstream sums of logs stay exactly symmetric.
  return symmetrized(eig.eigenvectors() * lambda.log().matrix().asDiagonal() *
                     eig.eigenvectors().transpose());
}

SymPosDef spd_exp(const Eigen::MatrixXd& sym) {
  require_square(sym, "matrix exponential input");
  const double fro = sym.norm();
  const double asym = (sym - sym.transpose()).cwiseAbs().maxCoeff();
  if (fro > 0.0 && asym > kSymTol * fro)
    throw NotSpdError("matrix exponential input must be symmetric");
  auto eig = detail::sym_eig(sym);
  Eigen::ArrayXd lambda = eig.eigenvalues().array();
  Eigen::MatrixXd result = eig.eigenvectors() * lambda.exp().matrix().asDiagonal() *
                           eig.eigenvectors().transpose();
  return unchecked_spd(symmetrized(result));
}

std::pair<SymPosDef, SymPosDef> sqrt_and_inv_sqrt(const SymPosDef& s) {
  auto eig = detail::sym_eig(s.matrix());
  Eigen::ArrayXd root = eig.eigenvalues().array().sqrt();
  Eigen::MatrixXd half = eig.eigenvectors() * root.matrix().asDiagonal() *
                         eig.eigenvectors().transpose();
  Eigen::MatrixXd inv_half = eig.eigenvectors() *
                             root.inverse().matrix().asDiagonal() *
                             eig.eigenvectors().transpose();
  return {unchecked_spd(symmetrized(half)), unchecked_spd(symmetrized(inv_half))};
}

double airm_dist2(const SymPosDef& x, const SymPosDef& y) {
  require_same_dim(x, y);
  return detail::airm_dist2_raw(x.matrix(), y.matrix());
}

double stein_div(const SymPosDef& x, const SymPosDef& y) {
  require_same_dim(x, y);
  return detail::stein_div_raw(x.matrix(), y.matrix());
}

double dist2(MetricKind metric, const SymPosDef& x, const SymPosDef& y) {
  return metric == MetricKind::kAirm ? airm_dist2(x, y) : stein_div(x, y);
}

SymPosDef karcher_mean(std::span<const SymPosDef> set, const MeanOptions& options) {
  require_uniform_dims(set);
  const int n = static_cast<int>(set.size());
  const int d = set.front().dim();
  if (n == 1) return set.front();

  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  for (const auto& s : set) acc += s.matrix();
  SymPosDef current = unchecked_spd(symmetrized(acc / n));

  double residual = 0.0;
  for (int iter = 0; iter < options.max_iter; ++iter) {
    auto [half, inv_half] = sqrt_and_inv_sqrt(current);
    Eigen::MatrixXd log_sum = Eigen::MatrixXd::Zero(d, d);
    for (const auto& s : set) {
      Eigen::MatrixXd whitened =
          inv_half.matrix() * s.matrix() * inv_half.matrix();
      log_sum += spd_log(SymPosDef(symmetrized(whitened)));
    }
    residual = log_sum.norm();
    if (residual <= options.tol * n) return current;
    SymPosDef step = spd_exp(log_sum / n);
    Eigen::MatrixXd updated =
        half.matrix() * step.matrix() * half.matrix();
    current = unchecked_spd(symmetrized(updated));
  }
  throw NoConvergenceError("Karcher mean did not converge", options.max_iter,
                           residual);
}

SymPosDef stein_mean(std::span<const SymPosDef> set, const MeanOptions& options) {
  require_uniform_dims(set);
  const int n = static_cast<int>(set.size());
  const int d = set.front().dim();
  if (n == 1) return set.front();

  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  for (const auto& s : set) acc += s.matrix();
  Eigen::MatrixXd current = symmetrized(acc / n);

  double grad_norm = 0.0;
  for (int iter = 0; iter < options.max_iter; ++iter) {
    Eigen::MatrixXd harmonic = Eigen::MatrixXd::Zero(d, d);
    for (const auto& s : set) {
      Eigen::LLT<Eigen::MatrixXd> llt(
          Eigen::MatrixXd(0.5 * (current + s.matrix())));
      if (llt.info() != Eigen::Success)
        throw NotSpdError("Stein mean iterate lost positive definiteness");
      harmonic += llt.solve(Eigen::MatrixXd::Identity(d, d));
    }
    harmonic = symmetrized(harmonic / n);
    Eigen::LLT<Eigen::MatrixXd> llt_current(current);
    if (llt_current.info() != Eigen::Success)
      throw NotSpdError("Stein mean iterate lost positive definiteness");
    Eigen::MatrixXd current_inv =
        llt_current.solve(Eigen::MatrixXd::Identity(d, d));
    // Gradient of the Stein cost at the current iterate:
    // (1/2) sum_i ((X + S_i)/2)^{-1} - (N/2) X^{-1}.
    grad_norm = 0.5 * n * (harmonic - current_inv).norm();
    if (grad_norm <= options.tol * n) return SymPosDef(current);
    Eigen::LLT<Eigen::MatrixXd> llt_h(harmonic);
    if (llt_h.info() != Eigen::Success)
      throw NotSpdError("Stein mean harmonic update is not positive definite");
    current = symmetrized(llt_h.solve(Eigen::MatrixXd::Identity(d, d)));
  }
  throw NoConvergenceError("Stein mean did not converge", options.max_iter,
                           grad_norm);
}

SymPosDef mean(MetricKind metric, std::span<const SymPosDef> set,
               const MeanOptions& options) {
  return metric == MetricKind::kAirm ? karcher_mean(set, options)
                                     : stein_mean(set, options);
}

SymPosDef congruence(const Eigen::MatrixXd& p, const SymPosDef& x) {
  require_square(p, "congruence transform");
  if (p.rows() != x.dim()) {
    std::ostringstream msg;
    msg << "congruence transform is " << p.rows() << "x" << p.cols()
        << " but operand has dimension " << x.dim();
    throw DimMismatchError(msg.str());
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(p);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (!(smin > 0.0) || smax / smin > kCondCap) {
    std::ostringstream msg;
    msg << "congruence transform condition number "
        << (smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity())
        << " exceeds cap " << kCondCap;
    throw SingularTransformError(msg.str());
  }
  return SymPosDef(symmetrized(p.transpose() * x.matrix() * p));
}

std::pair<std::vector<SymPosDef>, WhiteningContext> whiten_set(
    std::span<const SymPosDef> set, MetricKind metric, const MeanOptions& options) {
  SymPosDef center = mean(metric, set, options);
  Eigen::MatrixXd z = sqrt_and_inv_sqrt(center).second.matrix();
  std::vector<SymPosDef> whitened;
  whitened.reserve(set.size());
  for (const auto& s : set)
    whitened.push_back(SymPosDef(symmetrized(z * s.matrix() * z)));
  return {std::move(whitened), WhiteningContext{std::move(center), std::move(z), metric}};
}

}  // namespace gassa::spd
