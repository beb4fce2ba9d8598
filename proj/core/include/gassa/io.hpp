#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gassa/datagen.hpp"
#include "gassa/eval.hpp"
#include "gassa/gassa.hpp"
#include "gassa/manifold.hpp"
#include "gassa/spd.hpp"
#include "gassa/ssa.hpp"

/// Serialization of the library's types. Numbers survive a JSON or CSV
/// round trip bit-exactly. Schema violations (missing/unknown keys, size
/// mismatches) throw SchemaError; file-system problems throw IoError.
namespace gassa::io {

/// Covariance sets: a JSON array of {"dim": D, "data": [row-major]}.
void save_cov_set(const std::filesystem::path& path,
                  std::span<const spd::SymPosDef> covs);
std::vector<spd::SymPosDef> load_cov_set(const std::filesystem::path& path);

/// Labeled sets add a "label" field per entry.
void save_labeled_cov_set(const std::filesystem::path& path,
                          std::span<const eval::LabeledCov> examples);
std::vector<eval::LabeledCov> load_labeled_cov_set(
    const std::filesystem::path& path);

/// Subspaces: {"D": ..., "m": ..., "basis": [row-major D*m]}.
void save_subspace(const std::filesystem::path& path,
                   const manifold::Subspace& q);
manifold::Subspace load_subspace(const std::filesystem::path& path);

/// Ground-truth generator state (everything needed to recompute source
/// covariances and the true subspaces).
void save_model(const std::filesystem::path& path,
                const datagen::MixingModel& model);
datagen::MixingModel load_model(const std::filesystem::path& path);

/// Signals as CSV: header ch0,ch1,...; one time sample per row.
void save_signals_csv(const std::filesystem::path& path,
                      const Eigen::MatrixXd& samples);
Eigen::MatrixXd load_signals_csv(const std::filesystem::path& path);

/// Fit results (full diagnostics plus a config echo).
void save_gassa_result(const std::filesystem::path& path,
                       const GassaResult& result, const GassaConfig& config);
void save_ssa_result(const std::filesystem::path& path,
                     const ssa::SsaResult& result, const ssa::SsaConfig& config);

/// The slice of a saved fit result (either method) that evaluation needs.
/// For SSA results the s-basis is the orthonormalized row span of the
/// projection; classification through it is congruence-equivalent to using
/// the projection itself.
struct LoadedFit {
  std::string method;  // "gassa" or "ssa"
  manifold::Subspace n_basis;
  manifold::Subspace s_basis;
};
LoadedFit load_fit_result(const std::filesystem::path& path);

/// Benchmark reports: full JSON and a CSV summary
/// (method, mean, std, repeats).
void save_report_json(const std::filesystem::path& path,
                      const eval::ExperimentReport& report);
void save_report_csv(const std::filesystem::path& path,
                     const eval::ExperimentReport& report);

}  // namespace gassa::io
