#include "egogaze/image.hpp"

#include <algorithm>
#include <cmath>

namespace egogaze {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 1 || height < 1 || (channels != 1 && channels != 3)) {
    throw DimensionError("invalid image shape " + std::to_string(width) + "x" +
                         std::to_string(height) + "x" + std::to_string(channels));
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image Image::from_raw(const io::RawImage& raw) {
  Image img(raw.width, raw.height, raw.channels);
  for (std::size_t i = 0; i < raw.pixels.size(); ++i) img.data_[i] = raw.pixels[i];
  return img;
}

double Image::clamped(int x, int y, int c) const {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return at(x, y, c);
}

Image Image::gray() const {
  if (channels_ == 1) return *this;
  Image out(width_, height_, 1);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) out.at(x, y) = (at(x, y, 0) + at(x, y, 1) + at(x, y, 2)) / 3.0;
  }
  return out;
}

Image Image::channel(int c) const {
  Image out(width_, height_, 1);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) out.at(x, y) = at(x, y, c);
  }
  return out;
}

namespace {

// Overlap weights of destination cells with source pixels along one axis.
struct Span {
  int first;
  std::vector<double> weights;
};

std::vector<Span> area_spans(int src, int dst) {
  std::vector<Span> spans(static_cast<std::size_t>(dst));
  const double scale = static_cast<double>(src) / dst;
  for (int d = 0; d < dst; ++d) {
    const double lo = d * scale;
    const double hi = (d + 1) * scale;
    auto& s = spans[static_cast<std::size_t>(d)];
    s.first = static_cast<int>(std::floor(lo));
    const int last = std::min(src - 1, static_cast<int>(std::ceil(hi)) - 1);
    for (int p = s.first; p <= last; ++p) {
      const double w = std::min(hi, p + 1.0) - std::max(lo, static_cast<double>(p));
      s.weights.push_back(w / scale);
    }
  }
  return spans;
}

}  // namespace

Image resize(const Image& image, int width, int height) {
  if (width == image.width() && height == image.height()) return image;
  const auto xs = area_spans(image.width(), width);
  const auto ys = area_spans(image.height(), height);
  Image out(width, height, image.channels());
  for (int y = 0; y < height; ++y) {
    const auto& sy = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < width; ++x) {
      const auto& sx = xs[static_cast<std::size_t>(x)];
      for (int c = 0; c < image.channels(); ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < sy.weights.size(); ++j) {
          for (std::size_t i = 0; i < sx.weights.size(); ++i) {
            acc += sy.weights[j] * sx.weights[i] *
                   image.at(sx.first + static_cast<int>(i), sy.first + static_cast<int>(j), c);
          }
        }
        out.at(x, y, c) = acc;
      }
    }
  }
  return out;
}

Image resize_bilinear(const Image& image, int width, int height) {
  if (width == image.width() && height == image.height()) return image;
  Image out(width, height, image.channels());
  const double sx = static_cast<double>(image.width()) / width;
  const double sy = static_cast<double>(image.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::max(0.0, (y + 0.5) * sy - 0.5);
    const int y0 = static_cast<int>(fy);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::max(0.0, (x + 0.5) * sx - 0.5);
      const int x0 = static_cast<int>(fx);
      const double tx = fx - x0;
      for (int c = 0; c < image.channels(); ++c) {
        const double a = image.clamped(x0, y0, c);
        const double b = image.clamped(x0 + 1, y0, c);
        const double d = image.clamped(x0, y0 + 1, c);
        const double e = image.clamped(x0 + 1, y0 + 1, c);
        out.at(x, y, c) = (1 - ty) * ((1 - tx) * a + tx * b) + ty * ((1 - tx) * d + tx * e);
      }
    }
  }
  return out;
}

GridMap block_average(const Image& image, int k) {
  if (image.channels() != 1) throw DimensionError("block_average expects a single-channel image");
  if (image.width() < k || image.height() < k) {
    throw DimensionError("image smaller than the " + std::to_string(k) + "x" + std::to_string(k) + " grid");
  }
  GridMap out(k);
  for (int i = 0; i < k; ++i) {
    const int r0 = i * image.height() / k;
    const int r1 = (i + 1) * image.height() / k;
    for (int j = 0; j < k; ++j) {
      const int c0 = j * image.width() / k;
      const int c1 = (j + 1) * image.width() / k;
      double acc = 0.0;
      for (int y = r0; y < r1; ++y) {
        for (int x = c0; x < c1; ++x) acc += image.at(x, y);
      }
      out(i, j) = acc / ((r1 - r0) * (c1 - c0));
    }
  }
  return out;
}

Image translate(const Image& image, int dx, int dy) {
  Image out(image.width(), image.height(), image.channels());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < image.channels(); ++c) out.at(x, y, c) = image.clamped(x - dx, y - dy, c);
    }
  }
  return out;
}

namespace {

void zscore_block(Eigen::Ref<Eigen::RowVectorXd> block) {
  const double mean = block.mean();
  const double var = (block.array() - mean).square().mean();
  // Constant blocks would divide by ~0; round-off below this is treated as flat.
  if (var <= 1e-24 * std::max(1.0, mean * mean)) {
    block.setZero();
    return;
  }
  block = (block.array() - mean) / std::sqrt(var);
}

}  // namespace

Eigen::RowVectorXd builtin_descriptor(const Image& frame) {
  if (frame.width() < 32 || frame.height() < 32) {
    throw DimensionError("descriptor needs frames of at least 32x32");
  }
  const Image g = frame.gray();
  Image energy(g.width(), g.height(), 1);
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      const double gx = 0.5 * (g.clamped(x + 1, y) - g.clamped(x - 1, y));
      const double gy = 0.5 * (g.clamped(x, y + 1) - g.clamped(x, y - 1));
      energy.at(x, y) = gx * gx + gy * gy;
    }
  }
  const GridMap intensity = block_average(g, kDescriptorGrid);
  const GridMap grad = block_average(energy, kDescriptorGrid);
  Eigen::RowVectorXd out(kDescriptorLength);
  const int half = kDescriptorGrid * kDescriptorGrid;
  for (int i = 0; i < half; ++i) {
    out(i) = intensity[static_cast<std::size_t>(i)];
    out(half + i) = grad[static_cast<std::size_t>(i)];
  }
  zscore_block(out.segment(0, half));
  zscore_block(out.segment(half, half));
  return out;
}

FeatureMatrix describe_frames(const std::vector<Image>& frames) {
  if (frames.empty()) throw DimensionError("no frames to describe");
  FeatureMatrix out;
  out.provenance = Provenance::builtin_descriptor;
  out.data.resize(static_cast<Eigen::Index>(frames.size()), kDescriptorLength);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    out.data.row(static_cast<Eigen::Index>(i)) = builtin_descriptor(frames[i]);
  }
  return out;
}

}  // namespace egogaze
