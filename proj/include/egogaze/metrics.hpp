#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "egogaze/core.hpp"

namespace egogaze::metrics {

/// Mean 0, population std 1 over all cells; a zero-variance map maps to zeros.
GridMap zscore_map(const GridMap& map);

struct NssResult {
  double value = 0.0;
  bool degenerate = false;
};

NssResult nss_checked(const GridMap& map, Cell fixation);
double nss(const GridMap& map, Cell fixation);

/// Single-positive AUC: P(map[fix] > map[other]) + 0.5 P(map[fix] == map[other])
/// over the k^2 - 1 other cells.
double auc(const GridMap& map, Cell fixation);

/// Mean per-frame AUC of one map over several fixations.
double auc(const GridMap& map, const std::vector<Cell>& fixations);

/// Pearson correlation over cells; 0 when either map has zero variance.
double map_correlation(const GridMap& a, const GridMap& b);

struct FrameScore {
  int frame = 0;
  double nss = 0.0;
  double auc = 0.0;
};

struct ScoreReport {
  double nss_mean = 0.0;
  double auc_mean = 0.0;
  std::vector<FrameScore> per_frame;
  std::size_t frames_scored = 0;
  std::size_t degenerate_frames = 0;

  std::string to_csv() const;
  nlohmann::json summary() const;
};

/// Scores `maps[i]` against `trace.records[i]`; invalid records are skipped.
/// Maps are scored as given (callers clamp signed predictions first).
ScoreReport score_sequence(const std::vector<GridMap>& maps, const FixationTrace& trace);

/// Same map for every frame (spatial priors).
ScoreReport score_static(const GridMap& map, const FixationTrace& trace);

}  // namespace egogaze::metrics
