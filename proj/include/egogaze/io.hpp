#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "egogaze/core.hpp"

namespace egogaze::io {

namespace fs = std::filesystem;

/// Sidecar header path for a binary payload: `dir/name.bin` -> `dir/name.hdr.json`.
fs::path header_path(const fs::path& payload);

/// Writes `matrix` as little-endian f32, row-major, plus its sidecar header.
/// `extra` is merged into the header (rows/cols/dtype always win).
void save_matrix(const fs::path& path, const Eigen::MatrixXd& matrix,
                 const nlohmann::json& extra = nlohmann::json::object());

struct LoadedMatrix {
  Eigen::MatrixXd data;
  nlohmann::json header;
};
LoadedMatrix load_matrix(const fs::path& path);

void save_feature_matrix(const fs::path& path, const FeatureMatrix& features);
FeatureMatrix load_feature_matrix(const fs::path& path);

void save_map(const fs::path& path, const GridMap& map);
GridMap load_map(const fs::path& path);

/// Per-frame maps as `dir/000000.bin`, `dir/000001.bin`, ...
void save_map_sequence(const fs::path& dir, const std::vector<GridMap>& maps);
std::vector<GridMap> load_map_sequence(const fs::path& dir);

/// CSV `frame,x,y,valid`. Repeated rows for one frame are averaged (valid
/// samples only) and reported through `warnings`. Ids default to the file stem.
FixationTrace load_fixation_log(const fs::path& path, std::vector<std::string>* warnings = nullptr,
                                const std::string& sequence_id = {},
                                const std::string& subject_id = {});
void save_fixation_log(const fs::path& path, const FixationTrace& trace);

struct PointRecord {
  int frame = 0;
  std::string subject;
  double x = 0.0;
  double y = 0.0;
};

/// CSV `frame,subject,x,y`; used for manipulation clicks and vanishing points.
std::vector<PointRecord> load_point_log(const fs::path& path);
void save_point_log(const fs::path& path, const std::vector<PointRecord>& points);

/// 8-bit binary PGM (P5) or PPM (P6). Channels are returned interleaved.
struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<unsigned char> pixels;
};
RawImage read_pnm(const fs::path& path);
void write_pgm(const fs::path& path, int width, int height, const std::vector<unsigned char>& pixels);

void write_text(const fs::path& path, const std::string& content);

}  // namespace egogaze::io
