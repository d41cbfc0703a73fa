#include "egogaze/metrics.hpp"

#include <cmath>
#include <sstream>

namespace egogaze::metrics {

namespace {

struct Moments {
  double mean;
  double stddev;
};

Moments moments(std::span<const double> v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  return {mean, std::sqrt(var)};
}

// A map whose spread is pure round-off relative to its magnitude is flat.
bool flat(const Moments& m) { return m.stddev <= 1e-14 * std::max(1.0, std::abs(m.mean)); }

void check_cell(const GridMap& map, Cell c) {
  if (c.row < 0 || c.col < 0 || c.row >= map.k() || c.col >= map.k()) {
    throw CoordinateError("fixation cell (" + std::to_string(c.row) + "," + std::to_string(c.col) +
                          ") outside " + std::to_string(map.k()) + "x" + std::to_string(map.k()) +
                          " grid");
  }
}

}  // namespace

GridMap zscore_map(const GridMap& map) {
  const Moments m = moments(map.values());
  GridMap out(map.k());
  if (flat(m)) return out;
  for (std::size_t i = 0; i < map.size(); ++i) out[i] = (map[i] - m.mean) / m.stddev;
  return out;
}

NssResult nss_checked(const GridMap& map, Cell fixation) {
  check_cell(map, fixation);
  const Moments m = moments(map.values());
  if (flat(m)) return {0.0, true};
  return {(map.at(fixation) - m.mean) / m.stddev, false};
}

double nss(const GridMap& map, Cell fixation) { return nss_checked(map, fixation).value; }

double auc(const GridMap& map, Cell fixation) {
  check_cell(map, fixation);
  const double pos = map.at(fixation);
  const std::size_t fix = static_cast<std::size_t>(fixation.index(map.k()));
  double below = 0.0;
  double ties = 0.0;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (i == fix) continue;
    if (map[i] < pos) {
      below += 1.0;
    } else if (map[i] == pos) {
      ties += 1.0;
    }
  }
  return (below + 0.5 * ties) / static_cast<double>(map.size() - 1);
}

double auc(const GridMap& map, const std::vector<Cell>& fixations) {
  if (fixations.empty()) throw Error("auc needs at least one fixation");
  double acc = 0.0;
  for (const auto& f : fixations) acc += auc(map, f);
  return acc / static_cast<double>(fixations.size());
}

double map_correlation(const GridMap& a, const GridMap& b) {
  if (a.k() != b.k()) throw DimensionError("map_correlation needs maps of equal size");
  const Moments ma = moments(a.values());
  const Moments mb = moments(b.values());
  if (flat(ma) || flat(mb)) return 0.0;
  double cov = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) cov += (a[i] - ma.mean) * (b[i] - mb.mean);
  cov /= static_cast<double>(a.size());
  return std::clamp(cov / (ma.stddev * mb.stddev), -1.0, 1.0);
}

std::string ScoreReport::to_csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "frame,nss,auc\n";
  for (const auto& f : per_frame) out << f.frame << ',' << f.nss << ',' << f.auc << '\n';
  return out.str();
}

nlohmann::json ScoreReport::summary() const {
  return {{"nss_mean", nss_mean},
          {"auc_mean", auc_mean},
          {"frames_scored", frames_scored},
          {"degenerate_frames", degenerate_frames}};
}

namespace {

template <class MapAt>
ScoreReport score_impl(const FixationTrace& trace, MapAt&& map_at) {
  ScoreReport report;
  for (std::size_t t = 0; t < trace.records.size(); ++t) {
    const auto& r = trace.records[t];
    if (!r.valid) continue;
    const GridMap& map = map_at(t);
    const Cell cell = fixation_cell(r.x, r.y, map.k());
    const NssResult n = nss_checked(map, cell);
    report.per_frame.push_back({r.frame, n.value, auc(map, cell)});
    if (n.degenerate) ++report.degenerate_frames;
  }
  report.frames_scored = report.per_frame.size();
  for (const auto& f : report.per_frame) {
    report.nss_mean += f.nss;
    report.auc_mean += f.auc;
  }
  if (report.frames_scored > 0) {
    report.nss_mean /= static_cast<double>(report.frames_scored);
    report.auc_mean /= static_cast<double>(report.frames_scored);
  }
  return report;
}

}  // namespace

ScoreReport score_sequence(const std::vector<GridMap>& maps, const FixationTrace& trace) {
  if (maps.size() != trace.records.size()) {
    throw DimensionError("have " + std::to_string(maps.size()) + " maps for " +
                         std::to_string(trace.records.size()) + " trace records");
  }
  return score_impl(trace, [&](std::size_t t) -> const GridMap& { return maps[t]; });
}

ScoreReport score_static(const GridMap& map, const FixationTrace& trace) {
  return score_impl(trace, [&](std::size_t) -> const GridMap& { return map; });
}

}  // namespace egogaze::metrics
