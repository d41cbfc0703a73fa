#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "egogaze/core.hpp"
#include "egogaze/image.hpp"

namespace egogaze::bottomup {

struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<double> u;
  std::vector<double> v;
};

struct HornSchunckParams {
  double alpha = 1.0;
  int iters = 200;
  double tol = 1e-4;
};

struct HornSchunckDiagnostics {
  int iterations = 0;
  double last_mean_update = 0.0;
  /// Energy of the initial field and after every 10th iteration.
  std::vector<double> energy;
};

/// Classical Horn-Schunck: block-Jacobi sweeps of the variational system
/// with the 1/6, 1/12 neighbor stencil. Stops after `iters` sweeps or once the
/// mean per-pixel update drops below `tol`.
FlowField horn_schunck(const Image& frame_a, const Image& frame_b,
                       const HornSchunckParams& params = {},
                       HornSchunckDiagnostics* diagnostics = nullptr);

/// Per-pixel |(u, v)| block-averaged to k x k and max-normalized.
GridMap flow_magnitude_map(const FlowField& flow, int k);

/// Spectral residual saliency at 64x64, block-averaged and max-normalized.
GridMap spectral_residual(const Image& frame, int k);

/// Center-surround saliency over intensity and two color-opponency
/// channels, max-normalized. Grayscale frames contribute intensity only.
GridMap itti_lite(const Image& frame, int k);

struct GbvsOptions {
  double sigma_frac = 0.15;
  double tol = 1e-9;
  int max_iters = 10000;
  /// Initial distribution for the power iteration; uniform when unset.
  std::optional<std::vector<double>> start;
};

struct GbvsResult {
  GridMap distribution;  // sums to 1
  int iterations = 0;
  double residual = 0.0;  // ||pi P - pi||_1 at exit
  bool degenerate = false;
};

/// Row-stochastic transition matrix over the cells of `activation` with
/// w(a -> b) = |v(a) - v(b)| exp(-d(a,b)^2 / (2 sigma^2)). Rows with no
/// outgoing weight are left zero.
Eigen::MatrixXd gbvs_transition(const GridMap& activation, double sigma);

/// Stationary distribution of the activation graph by (lazy) power
/// iteration. Throws ConvergenceError when max_iters is exhausted.
GbvsResult gbvs_stationary(const GridMap& activation, const GbvsOptions& options = {});

/// Graph-based saliency on the k x k block-mean intensity of `frame`.
GbvsResult gbvs_lite(const Image& frame, int k, const GbvsOptions& options = {});

inline constexpr std::array<std::string_view, 4> kCueOrder = {"itti", "gbvs", "sr", "of"};

/// Offset of a cue's block within a cue-stack feature row.
int cue_offset(std::string_view name, int k);

struct CueStackOptions {
  HornSchunckParams flow;
  int flow_resolution = 128;
  int jobs = 1;
};

struct CueStack {
  int k = kDefaultGrid;
  /// frames[t][c] is cue kCueOrder[c] at frame t.
  std::vector<std::array<GridMap, kCueOrder.size()>> frames;

  const GridMap& map(std::size_t frame, std::string_view cue) const;
  std::vector<GridMap> stream(std::string_view cue) const;
  FeatureMatrix features() const;
};

/// All four cues per frame; frame 0 has a zero flow map.
CueStack build_cue_stack(const std::vector<Image>& frames, int k, const CueStackOptions& options = {});

}  // namespace egogaze::bottomup
