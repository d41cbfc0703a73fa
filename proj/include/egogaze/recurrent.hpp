#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "egogaze/core.hpp"

namespace egogaze::recurrent {

inline constexpr int kLayers = 3;
inline constexpr int kDefaultHidden = 20;

/// One GRU layer. w_* act on the layer input (hidden x input), u_* on the
/// previous state (hidden x hidden).
struct GruLayerParams {
  Eigen::MatrixXd w_z, u_z;
  Eigen::VectorXd b_z;
  Eigen::MatrixXd w_r, u_r;
  Eigen::VectorXd b_r;
  Eigen::MatrixXd w_h, u_h;
  Eigen::VectorXd b_h;

  static GruLayerParams zeros(int input_dim, int hidden);
};

/// Every trainable tensor of the stacked model. Gradients and Adam moments
/// use the same shape.
struct GruParameters {
  std::array<GruLayerParams, kLayers> layers;
  Eigen::MatrixXd readout_w;  // k^2 x hidden
  Eigen::VectorXd readout_b;  // k^2

  static GruParameters zeros(int input_dim, int hidden, int cells);

  struct Tensor {
    std::string name;
    Eigen::Index rows;
    Eigen::Index cols;
    double* data;
    Eigen::Map<Eigen::VectorXd> flat() const { return {data, rows * cols}; }
  };
  /// Fixed order: per layer w_z u_z b_z w_r u_r b_r w_h u_h b_h, then
  /// readout_w, readout_b. Checkpoints and optimizer state rely on it.
  std::vector<Tensor> tensors();
  Eigen::Index count() const;
  double squared_norm() const;
  bool all_finite() const;
};

struct AdamState {
  GruParameters m;
  GruParameters v;
  long step = 0;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  int epochs = 25;
  int bptt_window = 6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GruGazeModel {
  int k = kDefaultGrid;
  int input_dim = 0;
  int hidden = kDefaultHidden;
  GruParameters params;
  AdamState adam;
  int epochs_trained = 0;
  std::uint64_t seed = 0;

  int cells() const { return k * k; }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
  static GruGazeModel random(int input_dim, int k, std::uint64_t seed, int hidden = kDefaultHidden);
  static GruGazeModel zeros(int input_dim, int k, int hidden = kDefaultHidden);
};

struct GruCellCache {
  Eigen::VectorXd x, h_prev, z, r, candidate;
};

/// z = sigmoid(W_z x + U_z h + b_z), r = sigmoid(W_r x + U_r h + b_r),
/// h' = z . h + (1 - z) . tanh(W_h x + U_h (r . h) + b_h).
Eigen::VectorXd gru_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                                 const GruLayerParams& params, GruCellCache* cache = nullptr);

struct SequenceOutput {
  Eigen::MatrixXd logits;  // T x k^2
  std::vector<GridMap> maps;
};

/// Runs the stack from a zero state and returns per-frame softmax maps.
SequenceOutput forward_sequence(const GruGazeModel& model, const Eigen::MatrixXd& features);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
/// -log softmax(logits)[target], computed stably.
double loss(const Eigen::VectorXd& logits, int target);

using HiddenState = std::array<Eigen::VectorXd, kLayers>;

struct WindowResult {
  double loss_sum = 0.0;  // summed over scored frames
  int scored = 0;
  HiddenState final_state;
};

/// Forward and truncated backward pass over one window. `targets[t] < 0`
/// marks frames that carry no loss. Gradients of the mean loss over scored
/// frames are written into `grads` (overwritten).
WindowResult window_loss_and_gradients(const GruGazeModel& model, const Eigen::MatrixXd& features,
                                       const std::vector<int>& targets, const HiddenState& initial,
                                       GruParameters* grads);

struct TrainingSequence {
  const FeatureMatrix* features;
  const FixationTrace* trace;
};

struct TrainResult {
  GruGazeModel model;
  std::vector<double> epoch_loss;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int epoch, int window, double grad_norm)
      : Error(what), epoch_(epoch), window_(window), grad_norm_(grad_norm) {}
  int epoch() const { return epoch_; }
  int window() const { return window_; }
  double grad_norm() const { return grad_norm_; }

 private:
  int epoch_;
  int window_;
  double grad_norm_;
};

/// Truncated BPTT over non-overlapping windows, one Adam step per window.
/// The hidden state carries across windows of a sequence and resets between
/// sequences. Returns the mean per-frame loss of each epoch.
TrainResult train(GruGazeModel model, const std::vector<TrainingSequence>& sequences,
                  const TrainConfig& config);
TrainResult train(GruGazeModel model, const FeatureMatrix& features, const FixationTrace& trace,
                  const TrainConfig& config);

/// Target cell per record, -1 for invalid frames.
std::vector<int> target_cells(const FixationTrace& trace, int k);

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  bool finite = true;
};

/// Compares analytic gradients with central differences (step 1e-5) on every
/// parameter. `tamper` may alter the analytic gradients before comparison.
GradientCheckReport gradient_check(const GruGazeModel& model, const Eigen::MatrixXd& features,
                                   const std::vector<int>& targets,
                                   const std::function<void(GruParameters&)>& tamper = {});

void save_checkpoint(const std::filesystem::path& path, const GruGazeModel& model,
                     const TrainConfig& config);
struct Checkpoint {
  GruGazeModel model;
  TrainConfig config;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace egogaze::recurrent
