#pragma once

#include <vector>

#include <Eigen/Dense>

#include "egogaze/core.hpp"
#include "egogaze/io.hpp"

namespace egogaze {

/// Frame raster with 1 (gray) or 3 (RGB) interleaved channels. Intensity
/// units are arbitrary; loaders produce 0..255.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels = 1, double fill = 0.0);

  static Image from_raw(const io::RawImage& raw);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  double& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  double at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  /// Coordinates clamped to the image (replicated border).
  double clamped(int x, int y, int c = 0) const;

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  Image gray() const;
  Image channel(int c) const;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<double> data_;
};

/// Area-weighted resampling; exact box averaging when shrinking.
Image resize(const Image& image, int width, int height);
/// Bilinear interpolation, used to bring pyramid levels back up.
Image resize_bilinear(const Image& image, int width, int height);

/// Averages single-channel `image` over a k x k partition. Cell (i, j) spans
/// rows [i*H/k, (i+1)*H/k) and columns [j*W/k, (j+1)*W/k) in integer division.
GridMap block_average(const Image& image, int k);

/// Shifts content by (dx, dy) pixels with replicated borders.
Image translate(const Image& image, int dx, int dy);

inline constexpr int kDescriptorGrid = 8;
inline constexpr int kDescriptorLength = 2 * kDescriptorGrid * kDescriptorGrid;

/// Handcrafted 128-D frame descriptor: an 8x8 block-mean intensity grid and
/// an 8x8 block-mean gradient-energy grid, each z-scored separately (a
/// zero-variance block becomes zeros).
Eigen::RowVectorXd builtin_descriptor(const Image& frame);
FeatureMatrix describe_frames(const std::vector<Image>& frames);

}  // namespace egogaze
