#include "egogaze/baselines.hpp"

#include <cmath>

namespace egogaze::baselines {

GridMap central_gaussian(int k, double sigma_frac) {
  if (!(sigma_frac > 0.0) || !std::isfinite(sigma_frac)) {
    throw Error("central gaussian sigma fraction must be > 0");
  }
  const double sigma = sigma_frac * k;
  const double c = (k - 1) / 2.0;
  GridMap map(k);
  for (int r = 0; r < k; ++r) {
    for (int col = 0; col < k; ++col) {
      const double d2 = (r - c) * (r - c) + (col - c) * (col - c);
      map(r, col) = std::exp(-0.5 * d2 / (sigma * sigma));
    }
  }
  return map.normalize_sum();
}

AfmModel fit_afm(const std::vector<FixationTrace>& traces, int k, const GaussianKernel& kernel) {
  // Accumulate one-hot counts; smoothing is linear so it is applied once.
  GridMap counts(k);
  std::size_t n = 0;
  for (const auto& trace : traces) {
    trace.validate();
    for (const auto& r : trace.records) {
      if (!r.valid) continue;
      const Cell c = fixation_cell(r.x, r.y, k);
      counts(c.row, c.col) += 1.0;
      ++n;
    }
  }
  if (n == 0) throw Error("fit_afm needs at least one valid training fixation");
  AfmModel model;
  model.k = k;
  model.train_fixation_count = n;
  model.map = smooth_map(counts, kernel) * (1.0 / static_cast<double>(n));
  return model;
}

std::vector<GridMap> fom(const FixationTrace& trace, int k, const GaussianKernel& kernel) {
  trace.validate();
  std::vector<GridMap> maps;
  maps.reserve(trace.size());
  for (const auto& r : trace.records) {
    maps.push_back(r.valid ? smooth_map(rasterize_fixation(r.x, r.y, k), kernel) : GridMap(k));
  }
  return maps;
}

}  // namespace egogaze::baselines
