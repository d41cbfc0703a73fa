#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "egogaze/core.hpp"
#include "egogaze/io.hpp"

namespace egogaze::cues {

enum class PointKind { vanishing_point, manipulation_click };

struct PointAnnotation {
  int frame = 0;
  PointKind kind = PointKind::manipulation_click;
  std::string subject_id;  // clicks only
  double x = 0.0;
  double y = 0.0;
};

std::vector<PointAnnotation> from_point_log(const std::vector<io::PointRecord>& records, PointKind kind);

/// Rasterizes each point, sums, then smooths. No points gives a zero map.
GridMap point_to_map(const std::vector<PointAnnotation>& points, int k,
                     const GaussianKernel& kernel = GaussianKernel());

/// Per-frame maps for frames [0, frames), built from the points of each frame.
std::vector<GridMap> point_maps(const std::vector<PointAnnotation>& points, int frames, int k,
                                const GaussianKernel& kernel = GaussianKernel());

/// 1 - S for a map with values in [0, 1].
GridMap complement(const GridMap& map);

/// Both inputs max-normalized, mp weighted and added, result max-normalized.
GridMap augment(const GridMap& prediction, const GridMap& mp_map, double mp_weight = 1.0);

enum class HandCategory { no_hands, one_hand, two_hands };
const char* to_string(HandCategory c);

inline constexpr double kMinHandAreaFrac = 0.005;

/// Binary hand mask at working resolution. `hand_count` is the number of
/// 8-connected components covering at least kMinHandAreaFrac of the pixels,
/// capped at 2.
class HandMask {
 public:
  HandMask(int frame, int width, int height, std::vector<unsigned char> mask);
  static HandMask from_raw(int frame, const io::RawImage& raw);

  int frame() const { return frame_; }
  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<unsigned char>& mask() const { return mask_; }
  int hand_count() const { return hand_count_; }
  int component_count() const { return components_; }

 private:
  int frame_;
  int width_;
  int height_;
  std::vector<unsigned char> mask_;
  int hand_count_ = 0;
  int components_ = 0;
};

HandCategory hand_category(const HandMask& mask);

/// Fraction of each grid cell covered by the mask.
GridMap mask_map(const HandMask& mask, int k);

struct CategoryNss {
  std::array<double, 3> mean{};
  std::array<std::size_t, 3> frames{};
};

/// NSS of `maps` against `trace`, partitioned by the hand category of each
/// frame. Frames without a mask count as no-hands.
CategoryNss nss_by_hand_category(const std::vector<GridMap>& maps, const FixationTrace& trace,
                                 const std::vector<HandMask>& masks);

/// Mean pairwise correlation between subjects' video-averaged click maps.
/// Frames are [0, frames); a frame without clicks contributes a zero map.
double click_agreement(const std::vector<PointAnnotation>& clicks, int frames, int k,
                       const GaussianKernel& kernel = GaussianKernel());

/// Hand mask index CSV `frame,path`, paths relative to the CSV.
std::vector<HandMask> load_hand_masks(const std::filesystem::path& index_csv);

}  // namespace egogaze::cues
