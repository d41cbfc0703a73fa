#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "egogaze/core.hpp"
#include "egogaze/experiments.hpp"
#include "egogaze/image.hpp"

// Generators for the self-test and the --synthetic experiment modes.
namespace egogaze::synthetic {

struct TaskSpec {
  std::string id;
  double center_x = 0.5;
  double center_y = 0.5;
  double spread = 0.08;  // stationary std of the gaze path
  double rho = 0.9;      // AR(1) coefficient
  double prediction_error = 1.0;  // in grid cells, for noisy-oracle maps
};

struct GazePath {
  std::vector<double> x;
  std::vector<double> y;
  std::size_t size() const { return x.size(); }
};

/// AR(1) path around the task center, clamped to [lo, 1 - lo].
GazePath gaze_path(const TaskSpec& task, int frames, std::mt19937_64& rng, double lo = 0.02);

/// Trace following `path` plus i.i.d. subject noise; `invalid_frac` of the
/// frames are marked invalid.
FixationTrace trace_from_path(const GazePath& path, const std::string& sequence_id, const std::string& subject_id,
                              double noise, std::mt19937_64& rng, double invalid_frac = 0.0);

inline constexpr int kRbfSide = 6;

/// Column 0 is 1; the rest is projection * rbf(gaze) + noise, with rbf on a
/// kRbfSide x kRbfSide lattice of centers.
FeatureMatrix encode_features(const GazePath& path, const Eigen::MatrixXd& projection, double noise,
                              std::mt19937_64& rng);
/// Square random projection acting as a task's "scene appearance".
Eigen::MatrixXd random_projection(std::uint64_t seed);

/// Smoothed one-hot maps placed at the gaze point displaced by Gaussian
/// noise of `error_cells` grid cells.
std::vector<GridMap> noisy_oracle_maps(const GazePath& path, double error_cells, int k, const GaussianKernel& kernel,
                                       std::mt19937_64& rng, double lo = 0.02);

/// Five tasks; pairs share a center but differ in predictability.
std::vector<TaskSpec> distinct_tasks();
/// Five tasks at distinct interior centers with equal predictability.
std::vector<TaskSpec> equal_predictability_tasks();

/// One sequence per task with `subjects` traces around a shared path.
std::vector<experiments::Sequence> task_suite(const std::vector<TaskSpec>& tasks, int frames, int subjects,
                                              double subject_noise, std::uint64_t seed);

/// One sequence per task with noisy-oracle prediction maps.
std::vector<experiments::ActivitySequence> activity_suite(const std::vector<TaskSpec>& tasks, int frames, int k,
                                                          std::uint64_t seed);

/// Deterministic feature-to-cell task: `classes` one-hot inputs (times
/// `scale`), each bound to a fixed cell chosen by `mapping_seed`, held for
/// `segment` frames in an order drawn from `sequence_seed`.
struct LearnableTask {
  FeatureMatrix features;
  FixationTrace trace;
  std::vector<int> cells;  // target cell per frame
};
LearnableTask learnable_task(int frames, int k, std::uint64_t mapping_seed, std::uint64_t sequence_seed,
                             int classes = 8, int segment = 6, double scale = 3.0);

/// Grayscale frame with a textured background and a bright blob at (x, y).
Image render_frame(double x, double y, int size, std::mt19937_64& rng);

}  // namespace egogaze::synthetic
