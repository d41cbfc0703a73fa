#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "egogaze/errors.hpp"

namespace egogaze {

inline constexpr int kDefaultGrid = 20;

struct Cell {
  int row = 0;
  int col = 0;
  int index(int k) const { return row * k + col; }
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// k x k real-valued map over the frame, row-major. Every module exchanges
/// attention and saliency in this form. Values must be finite; sign is not
/// enforced here because z-scored and raw regression outputs are signed.
class GridMap {
 public:
  GridMap() = default;
  explicit GridMap(int k, double fill = 0.0);
  GridMap(int k, std::vector<double> values);

  static GridMap one_hot(int k, Cell cell);

  int k() const { return k_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(int row, int col) { return values_[static_cast<std::size_t>(row * k_ + col)]; }
  double operator()(int row, int col) const {
    return values_[static_cast<std::size_t>(row * k_ + col)];
  }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double at(Cell c) const { return (*this)(c.row, c.col); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double sum() const;
  double max() const;
  double min() const;
  std::size_t argmax() const;
  bool is_nonnegative() const;

  /// Scaled to sum 1. An all-zero map is returned unchanged.
  GridMap normalize_sum() const;
  /// Scaled so the maximum is 1. Maps with max <= 0 become all zeros.
  GridMap normalize_max() const;
  /// Negative cells set to 0.
  GridMap clamped() const;

  GridMap& operator+=(const GridMap& other);
  GridMap& operator*=(double s);
  friend GridMap operator+(GridMap a, const GridMap& b) { return a += b; }
  friend GridMap operator*(GridMap a, double s) { return a *= s; }
  friend GridMap operator*(double s, GridMap a) { return a *= s; }
  friend bool operator==(const GridMap&, const GridMap&) = default;

 private:
  int k_ = 0;
  std::vector<double> values_;
};

class GaussianKernel {
 public:
  explicit GaussianKernel(int width = 5, double sigma = 1.0);

  int width() const { return width_; }
  int radius() const { return width_ / 2; }
  double sigma() const { return sigma_; }
  /// Normalized 1-D taps; the 2-D kernel is their outer product.
  const std::vector<double>& taps() const { return taps_; }
  double weight(int dy, int dx) const { return taps_[dy + radius()] * taps_[dx + radius()]; }

 private:
  int width_;
  double sigma_;
  std::vector<double> taps_;
};

struct FixationRecord {
  int frame = 0;
  double x = 0.0;
  double y = 0.0;
  bool valid = true;
};

struct FixationTrace {
  std::string sequence_id;
  std::string subject_id;
  std::vector<FixationRecord> records;

  std::size_t size() const { return records.size(); }
  std::size_t valid_count() const;
  /// Throws on non-increasing frame indices or out-of-range valid coordinates.
  void validate() const;
};

enum class Provenance { ingested, builtin_descriptor, cue_stack };

const char* to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

struct FeatureMatrix {
  Eigen::MatrixXd data;
  Provenance provenance = Provenance::ingested;

  Eigen::Index rows() const { return data.rows(); }
  Eigen::Index cols() const { return data.cols(); }
  void validate() const;
  FeatureMatrix select_rows(std::span<const int> rows) const;
};

/// Row t is the linearized smoothed fixation map of frame t. Invalid frames
/// hold a zero row and are flagged in `valid`.
struct TargetMatrix {
  int k = kDefaultGrid;
  Eigen::MatrixXd data;
  std::vector<bool> valid;

  Eigen::Index rows() const { return data.rows(); }
};

Cell fixation_cell(double x, double y, int k);
GridMap rasterize_fixation(double x, double y, int k);
GridMap smooth_map(const GridMap& map, const GaussianKernel& kernel);
TargetMatrix build_targets(const FixationTrace& trace, int k, const GaussianKernel& kernel);

/// Row-major flattening used for regression features and targets.
Eigen::RowVectorXd linearize(const GridMap& map);
GridMap unlinearize(const Eigen::Ref<const Eigen::RowVectorXd>& row, int k);

/// Subset of a trace by record position, renumbering frames 0..n-1.
FixationTrace select_records(const FixationTrace& trace, std::span<const int> positions);

}  // namespace egogaze
