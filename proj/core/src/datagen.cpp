#include "gassa/datagen.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "gassa/random.hpp"

namespace gassa::datagen {

namespace {

using spd::SymPosDef;

Eigen::MatrixXd uniform_entries(int rows, int cols, Rng& rng) {
  std::uniform_real_distribution<double> uniform(-0.5, 0.5);
  Eigen::MatrixXd result(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) result(i, j) = uniform(rng);
  return result;
}

/// Haar-ish random orthogonal matrix: QR of a Gaussian matrix with the sign
/// of each column fixed by the R diagonal.
Eigen::MatrixXd random_orthogonal(int dim, Rng& rng) {
  Eigen::MatrixXd g = gaussian_matrix(dim, dim, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

double condition_number(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const double smin = svd.singularValues().minCoeff();
  if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
  return svd.singularValues().maxCoeff() / smin;
}

}  // namespace

void MixingModel::validate() const {
  const int d = ambient_dim();
  const int m = s_dim();
  if (d < 2 || m < 1 || m >= d)
    throw BadDimsError("mixing model needs D >= 2 and 0 < m < D");
  if (a.cols() != d) throw DimMismatchError("mixing transformation must be square");
  if (epochs < 1 || epoch_len < 1)
    throw BadDimsError("mixing model needs at least one epoch of positive length");
  const auto n = static_cast<std::size_t>(epochs);
  if (c.size() != n || mu.size() != n || lambda_n.size() != n)
    throw DimMismatchError("per-epoch parameter lists must have length N");
  for (int i = 0; i < epochs; ++i) {
    if (c[i].rows() != d - m || c[i].cols() != m)
      throw DimMismatchError("coupling matrices must be (D-m) x m");
    if (mu[i].size() != d - m)
      throw DimMismatchError("mean shifts must have length D-m");
    if (lambda_n[i].dim() != d - m)
      throw DimMismatchError("non-stationary covariances must be (D-m) x (D-m)");
  }
  for (int j = 0; j < d; ++j) {
    if (std::abs(a.col(j).norm() - 1.0) > 1e-8)
      throw RankDeficientError("mixing columns must have unit norm");
  }
  if (condition_number(a) > spd::kCondCap)
    throw SingularTransformError("mixing transformation is numerically singular");
}

Eigen::MatrixXd gen_mixing(int dim, std::uint64_t seed) {
  if (dim < 2) throw BadDimsError("mixing dimension must be at least 2");
  Rng rng(seed);
  constexpr int kMaxAttempts = 100;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Eigen::MatrixXd a = uniform_entries(dim, dim, rng);
    bool valid = true;
    for (int j = 0; j < dim; ++j) {
      const double norm = a.col(j).norm();
      if (!(norm > 0.0)) {
        valid = false;
        break;
      }
      a.col(j) /= norm;
    }
    if (valid && condition_number(a) <= 1e6) return a;
  }
  std::ostringstream msg;
  msg << "no well-conditioned mixing transformation found in " << kMaxAttempts
      << " attempts (dim " << dim << ", seed " << seed << ")";
  throw GenerationFailureError(msg.str());
}

SymPosDef gen_random_spd(int dim, std::uint64_t seed, double eig_min,
                         double eig_max) {
  if (dim < 1) throw BadDimsError("dimension must be positive");
  if (!(eig_min > 0.0) || !(eig_max >= eig_min))
    throw ConfigError("eigenvalue range must satisfy 0 < eig_min <= eig_max");
  Rng rng(seed);
  Eigen::MatrixXd b = random_orthogonal(dim, rng);
  std::uniform_real_distribution<double> uniform(eig_min, eig_max);
  Eigen::VectorXd gamma(dim);
  for (int i = 0; i < dim; ++i) gamma(i) = uniform(rng);
  Eigen::MatrixXd s = b * gamma.asDiagonal() * b.transpose();
  return SymPosDef(0.5 * (s + s.transpose()));
}

MixingModel make_model(int dim, int m, int epochs, int epoch_len,
                       std::uint64_t seed, const GenScales& scales) {
  if (dim < 2 || m < 1 || m >= dim)
    throw BadDimsError("model needs D >= 2 and 0 < m < D");
  if (epochs < 1 || epoch_len < 1)
    throw BadDimsError("model needs at least one epoch of positive length");
  if (!(scales.eig_min > 0.0) || !(scales.eig_max >= scales.eig_min))
    throw ConfigError("eigenvalue range must satisfy 0 < eig_min <= eig_max");
  if (!(scales.mu_scale >= 0.0) || !std::isfinite(scales.mu_scale))
    throw ConfigError("mu_scale must be finite and non-negative");

  MixingModel model;
  model.epochs = epochs;
  model.epoch_len = epoch_len;
  model.seed = seed;
  if (scales.orthogonal_mixing) {
    Rng rng(derive_seed(seed, 0));
    model.a = random_orthogonal(dim, rng);
  } else {
    model.a = gen_mixing(dim, derive_seed(seed, 0));
  }
  model.lambda_s =
      gen_random_spd(m, derive_seed(seed, 1), scales.eig_min, scales.eig_max);

  const double c_std =
      scales.c_scale < 0.0 ? 1.0 / std::sqrt(static_cast<double>(m))
                           : scales.c_scale;
  spd::SymPosDef shared_lambda_n = gen_random_spd(
      dim - m, derive_seed(seed, 2), scales.eig_min, scales.eig_max);
  model.c.reserve(epochs);
  model.mu.reserve(epochs);
  model.lambda_n.reserve(epochs);
  for (int i = 0; i < epochs; ++i) {
    const std::uint64_t epoch_seed = derive_seed(seed, 100 + i);
    Rng rng(derive_seed(epoch_seed, 0));
    model.c.push_back(c_std * gaussian_matrix(dim - m, m, rng));
    Rng rng_mu(derive_seed(epoch_seed, 1));
    model.mu.push_back(scales.mu_scale * gaussian_vector(dim - m, rng_mu));
    model.lambda_n.push_back(
        scales.constant_lambda_n
            ? shared_lambda_n
            : gen_random_spd(dim - m, derive_seed(epoch_seed, 2),
                             scales.eig_min, scales.eig_max));
  }
  model.validate();
  return model;
}

SymPosDef source_cov(const MixingModel& model, int i) {
  if (i < 0 || i >= model.epochs) {
    std::ostringstream msg;
    msg << "epoch index " << i << " out of range [0, " << model.epochs << ")";
    throw BadDimsError(msg.str());
  }
  const int d = model.ambient_dim();
  const int m = model.s_dim();
  const Eigen::MatrixXd& ls = model.lambda_s.matrix();
  const Eigen::MatrixXd& ci = model.c[i];
  Eigen::MatrixXd cls = ci * ls;  // C_i Lambda_s, the coupling block
  Eigen::MatrixXd cov(d, d);
  cov.topLeftCorner(m, m) = ls;
  cov.topRightCorner(m, d - m) = cls.transpose();
  cov.bottomLeftCorner(d - m, m) = cls;
  cov.bottomRightCorner(d - m, d - m) =
      cls * ci.transpose() + model.lambda_n[i].matrix();
  return SymPosDef(0.5 * (cov + cov.transpose()));
}

SymPosDef mixed_cov(const MixingModel& model, int i) {
  return spd::congruence(model.a.transpose(), source_cov(model, i));
}

manifold::Subspace true_s_projection(const MixingModel& model) {
  Eigen::MatrixXd a_inv = model.a.inverse();
  return manifold::Subspace::from_span(
      a_inv.topRows(model.s_dim()).transpose());
}

manifold::Subspace true_n_space(const MixingModel& model) {
  return manifold::Subspace::from_span(
      model.a.rightCols(model.ambient_dim() - model.s_dim()));
}

SignalSet gen_signals(const MixingModel& model) {
  model.validate();
  const int d = model.ambient_dim();
  const int m = model.s_dim();
  const int t = model.epoch_len;
  Eigen::MatrixXd ls_chol =
      Eigen::LLT<Eigen::MatrixXd>(model.lambda_s.matrix()).matrixL();

  Eigen::MatrixXd samples(model.epochs * t, d);
  for (int i = 0; i < model.epochs; ++i) {
    Rng rng(derive_seed(model.seed, 10'000'019 + static_cast<std::uint64_t>(i)));
    Eigen::MatrixXd ln_chol =
        Eigen::LLT<Eigen::MatrixXd>(model.lambda_n[i].matrix()).matrixL();
    // Rows are samples: s = L g per sample becomes G L^T on row blocks.
    Eigen::MatrixXd s_part = gaussian_matrix(t, m, rng) * ls_chol.transpose();
    Eigen::MatrixXd y_part = gaussian_matrix(t, d - m, rng) * ln_chol.transpose();
    y_part.rowwise() += model.mu[i].transpose();
    Eigen::MatrixXd n_part = s_part * model.c[i].transpose() + y_part;
    samples.middleRows(i * t, t).noalias() =
        s_part * model.a.leftCols(m).transpose() +
        n_part * model.a.rightCols(d - m).transpose();
  }
  return SignalSet{std::move(samples), t, model};
}

std::vector<Eigen::Ref<const Eigen::MatrixXd>> split_epochs(
    const Eigen::MatrixXd& samples, int t, double overlap_fraction) {
  const int total = static_cast<int>(samples.rows());
  if (t < 1) throw BadWindowError("epoch length must be positive");
  if (t > total) {
    std::ostringstream msg;
    msg << "epoch length " << t << " exceeds sample count " << total;
    throw BadWindowError(msg.str());
  }
  if (!(overlap_fraction >= 0.0) || overlap_fraction >= 1.0)
    throw BadWindowError("overlap fraction must lie in [0, 1)");
  int stride = static_cast<int>(std::llround(t * (1.0 - overlap_fraction)));
  if (stride < 1) stride = 1;
  std::vector<Eigen::Ref<const Eigen::MatrixXd>> segments;
  for (int start = 0; start + t <= total; start += stride)
    segments.emplace_back(samples.middleRows(start, t));
  return segments;
}

SymPosDef estimate_cov(const Eigen::Ref<const Eigen::MatrixXd>& segment,
                       const ssa::CovEstimator& estimator) {
  return ssa::epoch_stats(segment, estimator).cov;
}

namespace detail {

Eigen::MatrixXd uniform_mixing_entries(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  return uniform_entries(rows, cols, rng);
}

}  // namespace detail

}  // namespace gassa::datagen
