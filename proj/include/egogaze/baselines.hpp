#pragma once

#include <vector>

#include "egogaze/core.hpp"

namespace egogaze::baselines {

inline constexpr double kDefaultCenterSigmaFrac = 0.25;

/// Isotropic Gaussian centered at ((k-1)/2, (k-1)/2) with sigma = sigma_frac*k
/// cells, normalized to sum 1.
GridMap central_gaussian(int k, double sigma_frac = kDefaultCenterSigmaFrac);

/// Average fixation map: mean of smoothed one-hot maps over every valid
/// training frame of every training subject.
struct AfmModel {
  int k = kDefaultGrid;
  GridMap map;
  std::size_t train_fixation_count = 0;

  const GridMap& predict() const { return map; }
  std::vector<GridMap> predict(std::size_t frames) const { return std::vector<GridMap>(frames, map); }
};

AfmModel fit_afm(const std::vector<FixationTrace>& traces, int k, const GaussianKernel& kernel);

/// Fixation oracle: the smoothed ground-truth map of each frame. Invalid
/// frames get a zero map.
std::vector<GridMap> fom(const FixationTrace& trace, int k, const GaussianKernel& kernel);

}  // namespace egogaze::baselines
