#include "egogaze/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace egogaze {

GridMap::GridMap(int k, double fill) : k_(k) {
  if (k < 2) throw DimensionError("grid side must be >= 2, got " + std::to_string(k));
  if (!std::isfinite(fill)) throw Error("grid fill value must be finite");
  values_.assign(static_cast<std::size_t>(k) * k, fill);
}

GridMap::GridMap(int k, std::vector<double> values) : k_(k), values_(std::move(values)) {
  if (k < 2) throw DimensionError("grid side must be >= 2, got " + std::to_string(k));
  if (values_.size() != static_cast<std::size_t>(k) * k) {
    throw DimensionError("grid payload has " + std::to_string(values_.size()) +
                         " values, expected " + std::to_string(k * k));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error("grid values must be finite");
  }
}

GridMap GridMap::one_hot(int k, Cell cell) {
  GridMap m(k);
  m(cell.row, cell.col) = 1.0;
  return m;
}

double GridMap::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

double GridMap::max() const { return *std::max_element(values_.begin(), values_.end()); }

double GridMap::min() const { return *std::min_element(values_.begin(), values_.end()); }

std::size_t GridMap::argmax() const {
  return static_cast<std::size_t>(std::max_element(values_.begin(), values_.end()) -
                                  values_.begin());
}

bool GridMap::is_nonnegative() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v >= 0.0; });
}

GridMap GridMap::normalize_sum() const {
  GridMap out = *this;
  const double s = sum();
  if (s != 0.0) out *= 1.0 / s;
  return out;
}

GridMap GridMap::normalize_max() const {
  GridMap out = *this;
  const double m = max();
  if (m <= 0.0) {
    std::fill(out.values_.begin(), out.values_.end(), 0.0);
  } else {
    for (double& v : out.values_) v /= m;
  }
  return out;
}

GridMap GridMap::clamped() const {
  GridMap out = *this;
  for (double& v : out.values_) v = std::max(v, 0.0);
  return out;
}

GridMap& GridMap::operator+=(const GridMap& other) {
  if (other.k_ != k_) throw DimensionError("grid size mismatch in map addition");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

GridMap& GridMap::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

GaussianKernel::GaussianKernel(int width, double sigma) : width_(width), sigma_(sigma) {
  if (width < 1 || width % 2 == 0) {
    throw Error("kernel width must be a positive odd integer, got " + std::to_string(width));
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error("kernel sigma must be > 0");
  const int r = width / 2;
  taps_.resize(static_cast<std::size_t>(width));
  double total = 0.0;
  for (int i = -r; i <= r; ++i) {
    const double w = std::exp(-0.5 * i * i / (sigma * sigma));
    taps_[static_cast<std::size_t>(i + r)] = w;
    total += w;
  }
  for (double& t : taps_) t /= total;
}

std::size_t FixationTrace::valid_count() const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const auto& r) { return r.valid; }));
}

void FixationTrace::validate() const {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (i > 0 && r.frame <= records[i - 1].frame) {
      throw Error("frame indices must be strictly increasing (frame " + std::to_string(r.frame) +
                  " after " + std::to_string(records[i - 1].frame) + ")");
    }
    if (!std::isfinite(r.x) || !std::isfinite(r.y)) {
      throw CoordinateError("non-finite gaze at frame " + std::to_string(r.frame));
    }
    if (r.valid && (r.x < 0.0 || r.x > 1.0 || r.y < 0.0 || r.y > 1.0)) {
      throw CoordinateError("gaze outside [0,1] at frame " + std::to_string(r.frame));
    }
  }
}

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::ingested: return "ingested";
    case Provenance::builtin_descriptor: return "builtin_descriptor";
    case Provenance::cue_stack: return "cue_stack";
  }
  return "ingested";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "ingested") return Provenance::ingested;
  if (s == "builtin_descriptor") return Provenance::builtin_descriptor;
  if (s == "cue_stack") return Provenance::cue_stack;
  throw Error("unknown feature provenance '" + s + "'");
}

void FeatureMatrix::validate() const {
  if (data.rows() < 1 || data.cols() < 1) throw DimensionError("feature matrix must be non-empty");
  if (!data.allFinite()) throw Error("feature matrix contains non-finite values");
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const int> rows) const {
  FeatureMatrix out;
  out.provenance = provenance;
  out.data.resize(static_cast<Eigen::Index>(rows.size()), data.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.data.row(static_cast<Eigen::Index>(i)) = data.row(rows[i]);
  }
  return out;
}

Cell fixation_cell(double x, double y, int k) {
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0)) {
    throw CoordinateError("fixation (" + std::to_string(x) + ", " + std::to_string(y) +
                          ") outside [0,1]^2");
  }
  const int row = std::min(static_cast<int>(std::floor(y * k)), k - 1);
  const int col = std::min(static_cast<int>(std::floor(x * k)), k - 1);
  return {row, col};
}

GridMap rasterize_fixation(double x, double y, int k) {
  return GridMap::one_hot(k, fixation_cell(x, y, k));
}

GridMap smooth_map(const GridMap& map, const GaussianKernel& kernel) {
  const int k = map.k();
  const int r = kernel.radius();
  const auto& taps = kernel.taps();
  // Separable pass; cells outside the grid contribute zero.
  std::vector<double> tmp(map.size(), 0.0);
  for (int row = 0; row < k; ++row) {
    for (int col = 0; col < k; ++col) {
      double acc = 0.0;
      for (int d = -r; d <= r; ++d) {
        const int c = col + d;
        if (c >= 0 && c < k) acc += taps[static_cast<std::size_t>(d + r)] * map(row, c);
      }
      tmp[static_cast<std::size_t>(row * k + col)] = acc;
    }
  }
  GridMap out(k);
  for (int row = 0; row < k; ++row) {
    for (int col = 0; col < k; ++col) {
      double acc = 0.0;
      for (int d = -r; d <= r; ++d) {
        const int rr = row + d;
        if (rr >= 0 && rr < k) acc += taps[static_cast<std::size_t>(d + r)] * tmp[static_cast<std::size_t>(rr * k + col)];
      }
      out(row, col) = acc;
    }
  }
  return out;
}

TargetMatrix build_targets(const FixationTrace& trace, int k, const GaussianKernel& kernel) {
  trace.validate();
  std::vector<int> missing;
  int expected = 0;
  for (const auto& r : trace.records) {
    for (; expected < r.frame; ++expected) missing.push_back(expected);
    expected = r.frame + 1;
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) {
      list += (i ? "," : "") + std::to_string(missing[i]);
    }
    if (missing.size() > 20) list += ",...";
    throw GapError("trace '" + trace.subject_id + "' is missing frames: " + list,
                   std::move(missing));
  }
  TargetMatrix out;
  out.k = k;
  out.data = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(trace.size()), k * k);
  out.valid.resize(trace.size());
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const auto& r = trace.records[t];
    out.valid[t] = r.valid;
    if (!r.valid) continue;
    out.data.row(static_cast<Eigen::Index>(t)) =
        linearize(smooth_map(rasterize_fixation(r.x, r.y, k), kernel));
  }
  return out;
}

Eigen::RowVectorXd linearize(const GridMap& map) {
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(map.size()));
  for (std::size_t i = 0; i < map.size(); ++i) row(static_cast<Eigen::Index>(i)) = map[i];
  return row;
}

GridMap unlinearize(const Eigen::Ref<const Eigen::RowVectorXd>& row, int k) {
  if (row.size() != static_cast<Eigen::Index>(k) * k) {
    throw DimensionError("row of length " + std::to_string(row.size()) +
                         " cannot be reshaped to " + std::to_string(k) + "x" + std::to_string(k));
  }
  return GridMap(k, std::vector<double>(row.data(), row.data() + row.size()));
}

FixationTrace select_records(const FixationTrace& trace, std::span<const int> positions) {
  FixationTrace out{trace.sequence_id, trace.subject_id, {}};
  out.records.reserve(positions.size());
  int frame = 0;
  for (int p : positions) {
    auto r = trace.records.at(static_cast<std::size_t>(p));
    r.frame = frame++;
    out.records.push_back(r);
  }
  return out;
}

}  // namespace egogaze
