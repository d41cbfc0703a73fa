#include "egogaze/cues.hpp"

#include <fstream>
#include <sstream>

#include "egogaze/image.hpp"
#include "egogaze/metrics.hpp"

namespace egogaze::cues {

std::vector<PointAnnotation> from_point_log(const std::vector<io::PointRecord>& records, PointKind kind) {
  std::vector<PointAnnotation> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    out.push_back({r.frame, kind, kind == PointKind::manipulation_click ? r.subject : std::string(), r.x, r.y});
  }
  return out;
}

GridMap point_to_map(const std::vector<PointAnnotation>& points, int k, const GaussianKernel& kernel) {
  GridMap counts(k);
  for (const auto& p : points) {
    const Cell c = fixation_cell(p.x, p.y, k);
    counts(c.row, c.col) += 1.0;
  }
  return smooth_map(counts, kernel);
}

std::vector<GridMap> point_maps(const std::vector<PointAnnotation>& points, int frames, int k,
                                const GaussianKernel& kernel) {
  std::vector<std::vector<PointAnnotation>> per_frame(static_cast<std::size_t>(frames));
  for (const auto& p : points) {
    if (p.frame >= 0 && p.frame < frames) per_frame[static_cast<std::size_t>(p.frame)].push_back(p);
  }
  std::vector<GridMap> maps;
  maps.reserve(per_frame.size());
  for (const auto& pts : per_frame) maps.push_back(point_to_map(pts, k, kernel));
  return maps;
}

GridMap complement(const GridMap& map) {
  GridMap out(map.k());
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map[i] < 0.0 || map[i] > 1.0) {
      throw Error("complement needs values in [0,1], cell " + std::to_string(i) + " is " + std::to_string(map[i]));
    }
    out[i] = 1.0 - map[i];
  }
  return out;
}

GridMap augment(const GridMap& prediction, const GridMap& mp_map, double mp_weight) {
  if (prediction.k() != mp_map.k()) throw DimensionError("augment needs maps of equal size");
  return (prediction.normalize_max() + mp_weight * mp_map.normalize_max()).normalize_max();
}

const char* to_string(HandCategory c) {
  switch (c) {
    case HandCategory::no_hands: return "no-hands";
    case HandCategory::one_hand: return "one-hand";
    case HandCategory::two_hands: return "two-hands";
  }
  return "no-hands";
}

HandMask::HandMask(int frame, int width, int height, std::vector<unsigned char> mask)
    : frame_(frame), width_(width), height_(height), mask_(std::move(mask)) {
  if (width < 1 || height < 1 || mask_.size() != static_cast<std::size_t>(width) * height) {
    throw DimensionError("hand mask payload does not match its size");
  }
  for (auto& v : mask_) {
    if (v > 1) throw Error("hand mask values must be 0 or 1");
  }
  const std::size_t min_area =
      static_cast<std::size_t>(std::ceil(kMinHandAreaFrac * static_cast<double>(mask_.size())));
  std::vector<int> label(mask_.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t seed = 0; seed < mask_.size(); ++seed) {
    if (!mask_[seed] || label[seed]) continue;
    ++components_;
    std::size_t area = 0;
    stack.push_back(seed);
    label[seed] = components_;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++area;
      const int x = static_cast<int>(i) % width_;
      const int y = static_cast<int>(i) / width_;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= width_ || ny >= height_) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * width_ + nx;
          if (mask_[j] && !label[j]) {
            label[j] = components_;
            stack.push_back(j);
          }
        }
      }
    }
    if (area >= min_area) ++hand_count_;
  }
  hand_count_ = std::min(hand_count_, 2);
}

HandMask HandMask::from_raw(int frame, const io::RawImage& raw) {
  if (raw.channels != 1) throw Error("hand masks must be single-channel PGM");
  std::vector<unsigned char> m(raw.pixels.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = raw.pixels[i] > 0 ? 1 : 0;
  return HandMask(frame, raw.width, raw.height, std::move(m));
}

HandCategory hand_category(const HandMask& mask) {
  switch (mask.hand_count()) {
    case 0: return HandCategory::no_hands;
    case 1: return HandCategory::one_hand;
    default: return HandCategory::two_hands;
  }
}

GridMap mask_map(const HandMask& mask, int k) {
  Image img(mask.width(), mask.height(), 1);
  for (std::size_t i = 0; i < mask.mask().size(); ++i) img.data()[i] = mask.mask()[i];
  return block_average(img, k);
}

CategoryNss nss_by_hand_category(const std::vector<GridMap>& maps, const FixationTrace& trace,
                                 const std::vector<HandMask>& masks) {
  if (maps.size() != trace.size()) throw DimensionError("one map per trace record required");
  std::map<int, HandCategory> by_frame;
  for (const auto& m : masks) by_frame[m.frame()] = hand_category(m);
  CategoryNss out;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const auto& r = trace.records[t];
    if (!r.valid) continue;
    const auto it = by_frame.find(r.frame);
    const auto cat = static_cast<std::size_t>(it == by_frame.end() ? HandCategory::no_hands : it->second);
    out.mean[cat] += metrics::nss(maps[t], fixation_cell(r.x, r.y, maps[t].k()));
    ++out.frames[cat];
  }
  for (std::size_t c = 0; c < 3; ++c) {
    if (out.frames[c]) out.mean[c] /= static_cast<double>(out.frames[c]);
  }
  return out;
}

double click_agreement(const std::vector<PointAnnotation>& clicks, int frames, int k,
                       const GaussianKernel& kernel) {
  std::map<std::string, std::vector<PointAnnotation>> by_subject;
  for (const auto& c : clicks) by_subject[c.subject_id].push_back(c);
  if (by_subject.size() < 2) throw Error("click agreement needs at least two subjects");
  if (frames < 1) throw Error("click agreement needs at least one frame");
  std::vector<GridMap> averages;
  for (const auto& [subject, pts] : by_subject) {
    GridMap avg(k);
    for (const auto& m : point_maps(pts, frames, k, kernel)) avg += m;
    averages.push_back(avg * (1.0 / frames));
  }
  double total = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < averages.size(); ++i) {
    for (std::size_t j = i + 1; j < averages.size(); ++j) {
      total += metrics::map_correlation(averages[i], averages[j]);
      ++pairs;
    }
  }
  return total / pairs;
}

std::vector<HandMask> load_hand_masks(const std::filesystem::path& index_csv) {
  std::ifstream in(index_csv);
  if (!in) throw Error("cannot open " + index_csv.string());
  std::string line;
  std::size_t line_no = 0;
  std::vector<HandMask> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "frame,path") throw ParseError(index_csv.string(), 1, 0, "expected header 'frame,path'");
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(index_csv.string(), line_no, 0, "expected 'frame,path'");
    int frame = 0;
    try {
      frame = std::stoi(line.substr(0, comma));
    } catch (const std::exception&) {
      throw ParseError(index_csv.string(), line_no, 0, "bad frame index");
    }
    const auto path = index_csv.parent_path() / line.substr(comma + 1);
    out.push_back(HandMask::from_raw(frame, io::read_pnm(path)));
  }
  return out;
}

}  // namespace egogaze::cues
