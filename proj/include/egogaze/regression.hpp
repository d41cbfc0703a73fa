#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "egogaze/core.hpp"

namespace egogaze::regression {

inline constexpr double kDefaultCutoff = 1e-10;
inline constexpr double kDefaultCueRidge = 1e-6;

/// Linear map from frame features to linearized k x k fixation maps.
struct LinearGazeModel {
  Eigen::MatrixXd weights;  // m x k^2
  int k = kDefaultGrid;
  double ridge = 0.0;
  double cutoff = kDefaultCutoff;
  int rank = 0;
  double residual_norm = 0.0;  // Frobenius norm of M W - X on the fit rows

  Eigen::Index input_dim() const { return weights.rows(); }
};

/// Minimizes ||M W - X||^2 + ridge ||W||^2 through a thin SVD of M. Singular
/// values at or below cutoff * sigma_max are discarded, which yields the
/// minimum-norm solution when ridge is 0.
LinearGazeModel fit(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets, int k,
                    double ridge = 0.0, double cutoff = kDefaultCutoff);

/// Fits on the valid frames of `trace`, targets built with `kernel`.
LinearGazeModel fit(const FeatureMatrix& features, const FixationTrace& trace, int k,
                    const GaussianKernel& kernel, double ridge = 0.0, double cutoff = kDefaultCutoff);

/// Raw P = F W per row, before clamping.
std::vector<GridMap> predict_signed(const LinearGazeModel& model, const Eigen::MatrixXd& features);
GridMap predict_signed(const LinearGazeModel& model, const Eigen::RowVectorXd& row);

/// Prediction maps for scoring: negative cells clamped to zero.
std::vector<GridMap> predict(const LinearGazeModel& model, const FeatureMatrix& features);
GridMap predict(const LinearGazeModel& model, const Eigen::RowVectorXd& row);

struct NamedStream {
  std::string name;
  std::vector<GridMap> maps;
};

struct CueCombination {
  std::vector<std::string> names;
  LinearGazeModel model;
};

/// Concatenates the flattened per-frame maps of each stream (in the given
/// order) into a feature row.
FeatureMatrix stack_streams(const std::vector<NamedStream>& streams);

CueCombination combine_cues(const std::vector<NamedStream>& streams, const FixationTrace& trace,
                            const GaussianKernel& kernel = GaussianKernel(),
                            double ridge = kDefaultCueRidge, double cutoff = kDefaultCutoff);

/// Streams must match the names and order used for fitting.
std::vector<GridMap> predict(const CueCombination& combo, const std::vector<NamedStream>& streams);

void save_model(const std::filesystem::path& path, const LinearGazeModel& model);
LinearGazeModel load_model(const std::filesystem::path& path);

}  // namespace egogaze::regression
