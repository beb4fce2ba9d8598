#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace gassa {

/// splitmix64 step; used to decorrelate seeds derived from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a master seed and a stream index.
/// Adjacent indices yield statistically unrelated streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 1));
}

/// The engine used throughout the library. All randomized routines take an
/// explicit seed and construct their own engine, so results are reproducible
/// within a binary regardless of call order or thread count.
using Rng = std::mt19937_64;

/// Matrix with i.i.d. standard normal entries.
inline Eigen::MatrixXd gaussian_matrix(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd result(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) result(i, j) = normal(rng);
  return result;
}

/// Vector with i.i.d. standard normal entries.
inline Eigen::VectorXd gaussian_vector(int size, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd result(size);
  for (int i = 0; i < size; ++i) result(i) = normal(rng);
  return result;
}

}  // namespace gassa
