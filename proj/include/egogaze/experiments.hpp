#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "egogaze/core.hpp"
#include "egogaze/svm.hpp"

namespace egogaze::experiments {

/// One video: shared frame features plus one fixation trace per subject.
struct Sequence {
  std::string id;
  FeatureMatrix features;
  std::vector<FixationTrace> traces;
};

using Predictor = std::function<std::vector<GridMap>(const FeatureMatrix&)>;
using TrainFn = std::function<Predictor(const FeatureMatrix&, const std::vector<FixationTrace>&)>;

struct Score {
  double nss = 0.0;
  double auc = 0.0;
};
using EvalFn = std::function<Score(const std::vector<GridMap>&, const std::vector<FixationTrace>&)>;

/// Mean of the per-trace sequence scores.
Score mean_score(const std::vector<GridMap>& maps, const std::vector<FixationTrace>& traces);

/// Regression trainer: rows of `features` repeated once per trace.
TrainFn regression_trainer(int k, const GaussianKernel& kernel, double ridge = 0.0, double cutoff = 1e-10);
/// Static prior trainer: AFM of the given traces, repeated for every frame.
TrainFn afm_trainer(int k, const GaussianKernel& kernel);

struct ConfusionMatrix {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  Eigen::MatrixXd nss;
  Eigen::MatrixXd auc;
  std::vector<std::vector<bool>> missing;  // [train][test]
  std::vector<std::string> errors;         // messages of failed fits

  double diagonal_mean_auc() const;
  double off_diagonal_mean_auc() const;
};

/// Cell (i, j): model trained on sequence i, scored on sequence j. A failed
/// fit marks its whole row missing (NaN) and the run continues.
ConfusionMatrix transfer_matrix(const std::vector<Sequence>& sequences, const TrainFn& train,
                                const EvalFn& eval = mean_score, int jobs = 1);

struct AblationPoint {
  int budget = 0;  // subjects or frames
  int runs = 0;
  double nss_mean = 0.0;
  double nss_std = 0.0;
  double auc_mean = 0.0;
  double auc_std = 0.0;
};

/// All i-subsets of subjects for i = 1..S-1, each trained on the subset and
/// scored on the remaining subjects. Subsets are enumerated lexicographically.
std::vector<AblationPoint> subject_ablation(const Sequence& sequence, const TrainFn& train,
                                            const EvalFn& eval = mean_score, int jobs = 1);

/// Lexicographic i-combinations of {0..n-1}.
std::vector<std::vector<int>> combinations(int n, int i);

/// Training budgets step, 2*step, ... and the full length; `runs` seeded frame
/// subsets per budget (sorted indices), each scored on `test`.
std::vector<AblationPoint> frame_ablation(const Sequence& train_sequence, const Sequence& test,
                                          const TrainFn& train, int step, int runs, std::uint64_t seed,
                                          const EvalFn& eval = mean_score, int jobs = 1);

enum class WindowKind { avg_map, nss_vector, augmented };
const char* to_string(WindowKind kind);
inline constexpr WindowKind kWindowKinds[] = {WindowKind::avg_map, WindowKind::nss_vector, WindowKind::augmented};

struct WindowSet {
  int window = 0;
  int label = 0;
  std::vector<int> starts;
  Eigen::MatrixXd avg_map;     // count x k^2
  Eigen::MatrixXd nss_vector;  // count x w

  Eigen::MatrixXd features(WindowKind kind) const;
};

/// `count` windows of `w` consecutive frames with seeded starts drawn from
/// [begin, end - w]. Invalid frames contribute NSS 0.
WindowSet window_features(const std::vector<GridMap>& maps, const FixationTrace& trace, int w, int count,
                          std::uint64_t seed, int label = 0, int begin = 0, int end = -1);

struct ActivitySequence {
  std::string id;
  std::vector<GridMap> maps;
  FixationTrace trace;
};

struct ActivityConfig {
  std::vector<int> window_sizes{2, 5, 10, 20};
  int windows = 2000;
  double train_fraction = 0.7;
  svm::SvmConfig svm;
  std::uint64_t seed = 0;
};

struct ActivityCurves {
  std::vector<int> window_sizes;
  int classes = 0;
  double chance = 0.0;
  /// accuracy[kind][w index]
  std::array<std::vector<double>, 3> accuracy;
};

/// Window features from the first train_fraction of each sequence train the
/// SVM; windows from the remainder are classified.
ActivityCurves activity_curves(const std::vector<ActivitySequence>& sequences, const ActivityConfig& config,
                               int jobs = 1);

/// Rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace egogaze::experiments
