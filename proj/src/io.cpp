#include "egogaze/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace egogaze::io {

namespace {

static_assert(std::endian::native == std::endian::little, "f32le payloads assume a little-endian host");

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string& text, const fs::path& path, std::size_t line, const char* what) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ParseError(path.string(), line, 0, std::string("cannot parse ") + what + " '" + t + "'");
  }
  if (used != t.size()) {
    throw ParseError(path.string(), line, 0, std::string("trailing characters in ") + what);
  }
  if (!std::isfinite(v)) throw ParseError(path.string(), line, 0, std::string("non-finite ") + what);
  return v;
}

int parse_int(const std::string& text, const fs::path& path, std::size_t line, const char* what) {
  const std::string t = trim(text);
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(t, &used);
  } catch (const std::exception&) {
    throw ParseError(path.string(), line, 0, std::string("cannot parse ") + what + " '" + t + "'");
  }
  if (used != t.size()) throw ParseError(path.string(), line, 0, std::string("trailing characters in ") + what);
  return static_cast<int>(v);
}

struct CsvRows {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
};

CsvRows read_csv(const fs::path& path, const std::vector<std::string>& expected_header) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  CsvRows out;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split(line, ',');
    if (!header_seen) {
      std::vector<std::string> got;
      for (auto& f : fields) got.push_back(trim(f));
      if (got != expected_header) {
        std::string want;
        for (const auto& h : expected_header) want += (want.empty() ? "" : ",") + h;
        throw ParseError(path.string(), line_no, 0, "malformed header, expected '" + want + "'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != expected_header.size()) {
      throw ParseError(path.string(), line_no, 0,
                       "expected " + std::to_string(expected_header.size()) + " fields, got " +
                           std::to_string(fields.size()));
    }
    out.rows.emplace_back(line_no, std::move(fields));
  }
  if (!header_seen) throw ParseError(path.string(), 1, 0, "missing header");
  return out;
}

}  // namespace

fs::path header_path(const fs::path& payload) {
  fs::path p = payload;
  p.replace_extension(".hdr.json");
  return p;
}

void save_matrix(const fs::path& path, const Eigen::MatrixXd& matrix, const nlohmann::json& extra) {
  if (!matrix.allFinite()) throw Error("refusing to write non-finite matrix to " + path.string());
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  nlohmann::json header = extra;
  header["rows"] = matrix.rows();
  header["cols"] = matrix.cols();
  header["dtype"] = "f32le";
  write_text(header_path(path), header.dump(2) + "\n");

  std::vector<float> payload(static_cast<std::size_t>(matrix.size()));
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) payload[i++] = static_cast<float>(matrix(r, c));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
}

LoadedMatrix load_matrix(const fs::path& path) {
  const fs::path hdr = header_path(path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(read_all(hdr));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(hdr.string(), 1, e.byte, "malformed header JSON");
  }
  if (!header.is_object() || !header.contains("rows") || !header.contains("cols") ||
      !header.contains("dtype") || !header["rows"].is_number_integer() ||
      !header["cols"].is_number_integer()) {
    throw ParseError(hdr.string(), 1, 0, "header must contain integer rows, cols and dtype");
  }
  if (header["dtype"] != "f32le") {
    throw ParseError(hdr.string(), 1, 0, "unsupported dtype " + header["dtype"].dump());
  }
  const long rows = header["rows"].get<long>();
  const long cols = header["cols"].get<long>();
  if (rows < 0 || cols < 0) throw ParseError(hdr.string(), 1, 0, "negative dimensions");

  const std::string bytes = read_all(path);
  const std::size_t expected = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * sizeof(float);
  if (bytes.size() != expected) {
    throw DimensionError(path.string() + ": header declares " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " (" + std::to_string(expected) +
                         " bytes) but payload has " + std::to_string(bytes.size()) + " bytes");
  }
  LoadedMatrix out;
  out.header = header;
  out.data.resize(rows, cols);
  std::size_t offset = 0;
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      float v;
      std::memcpy(&v, bytes.data() + offset, sizeof(float));
      if (!std::isfinite(v)) throw ParseError(path.string(), 0, offset, "non-finite value in payload");
      out.data(r, c) = v;
      offset += sizeof(float);
    }
  }
  return out;
}

void save_feature_matrix(const fs::path& path, const FeatureMatrix& features) {
  features.validate();
  save_matrix(path, features.data, {{"provenance", to_string(features.provenance)}});
}

FeatureMatrix load_feature_matrix(const fs::path& path) {
  auto loaded = load_matrix(path);
  FeatureMatrix out;
  out.data = std::move(loaded.data);
  if (loaded.header.contains("provenance")) {
    out.provenance = provenance_from_string(loaded.header["provenance"].get<std::string>());
  }
  if (out.rows() < 1 || out.cols() < 1) {
    throw DimensionError(path.string() + ": feature matrix must have n,m >= 1");
  }
  return out;
}

void save_map(const fs::path& path, const GridMap& map) {
  Eigen::MatrixXd m(map.k(), map.k());
  for (int r = 0; r < map.k(); ++r) {
    for (int c = 0; c < map.k(); ++c) m(r, c) = map(r, c);
  }
  save_matrix(path, m, {{"kind", "grid_map"}});
}

GridMap load_map(const fs::path& path) {
  auto loaded = load_matrix(path);
  if (loaded.data.rows() != loaded.data.cols() || loaded.data.rows() < 2) {
    throw DimensionError(path.string() + ": grid map must be square with side >= 2");
  }
  const int k = static_cast<int>(loaded.data.rows());
  GridMap map(k);
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) map(r, c) = loaded.data(r, c);
  }
  return map;
}

void save_map_sequence(const fs::path& dir, const std::vector<GridMap>& maps) {
  fs::create_directories(dir);
  char name[32];
  for (std::size_t i = 0; i < maps.size(); ++i) {
    std::snprintf(name, sizeof(name), "%06zu.bin", i);
    save_map(dir / name, maps[i]);
  }
}

std::vector<GridMap> load_map_sequence(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".bin") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<GridMap> maps;
  maps.reserve(files.size());
  for (const auto& f : files) maps.push_back(load_map(f));
  return maps;
}

FixationTrace load_fixation_log(const fs::path& path, std::vector<std::string>* warnings,
                                const std::string& sequence_id, const std::string& subject_id) {
  const auto csv = read_csv(path, {"frame", "x", "y", "valid"});
  struct Acc {
    double sx = 0.0, sy = 0.0;
    int n_valid = 0;
    int n_rows = 0;
    double x = 0.0, y = 0.0;
  };
  std::map<int, Acc> frames;
  int last_frame = -1;
  for (const auto& [line, f] : csv.rows) {
    const int frame = parse_int(f[0], path, line, "frame");
    const double x = parse_real(f[1], path, line, "x");
    const double y = parse_real(f[2], path, line, "y");
    const int valid = parse_int(f[3], path, line, "valid");
    if (frame < 0) throw ParseError(path.string(), line, 0, "negative frame index");
    if (valid != 0 && valid != 1) throw ParseError(path.string(), line, 0, "valid must be 0 or 1");
    if (frame < last_frame) throw ParseError(path.string(), line, 0, "frame indices must not decrease");
    last_frame = frame;
    if (valid && (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0)) {
      throw CoordinateError(path.string() + ":" + std::to_string(line) + ": gaze (" +
                            trim(f[1]) + ", " + trim(f[2]) + ") outside [0,1]");
    }
    auto& acc = frames[frame];
    ++acc.n_rows;
    if (valid) {
      acc.sx += x;
      acc.sy += y;
      ++acc.n_valid;
    } else if (acc.n_rows == 1) {
      acc.x = x;
      acc.y = y;
    }
  }
  FixationTrace trace;
  trace.sequence_id = sequence_id.empty() ? path.stem().string() : sequence_id;
  trace.subject_id = subject_id.empty() ? path.stem().string() : subject_id;
  for (const auto& [frame, acc] : frames) {
    if (acc.n_rows > 1 && warnings) {
      warnings->push_back(path.string() + ": frame " + std::to_string(frame) + " has " +
                          std::to_string(acc.n_rows) + " samples; averaged valid ones");
    }
    FixationRecord rec;
    rec.frame = frame;
    if (acc.n_valid > 0) {
      rec.x = acc.sx / acc.n_valid;
      rec.y = acc.sy / acc.n_valid;
      rec.valid = true;
    } else {
      rec.x = acc.x;
      rec.y = acc.y;
      rec.valid = false;
    }
    trace.records.push_back(rec);
  }
  return trace;
}

void save_fixation_log(const fs::path& path, const FixationTrace& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "frame,x,y,valid\n";
  for (const auto& r : trace.records) {
    out << r.frame << ',' << r.x << ',' << r.y << ',' << (r.valid ? 1 : 0) << '\n';
  }
  write_text(path, out.str());
}

std::vector<PointRecord> load_point_log(const fs::path& path) {
  const auto csv = read_csv(path, {"frame", "subject", "x", "y"});
  std::vector<PointRecord> out;
  for (const auto& [line, f] : csv.rows) {
    PointRecord p;
    p.frame = parse_int(f[0], path, line, "frame");
    p.subject = trim(f[1]);
    p.x = parse_real(f[2], path, line, "x");
    p.y = parse_real(f[3], path, line, "y");
    if (p.frame < 0) throw ParseError(path.string(), line, 0, "negative frame index");
    if (p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0) {
      throw CoordinateError(path.string() + ":" + std::to_string(line) + ": point outside [0,1]");
    }
    out.push_back(std::move(p));
  }
  return out;
}

void save_point_log(const fs::path& path, const std::vector<PointRecord>& points) {
  std::ostringstream out;
  out.precision(17);
  out << "frame,subject,x,y\n";
  for (const auto& p : points) out << p.frame << ',' << p.subject << ',' << p.x << ',' << p.y << '\n';
  write_text(path, out.str());
}

RawImage read_pnm(const fs::path& path) {
  const std::string bytes = read_all(path);
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  const std::string magic = next_token();
  RawImage img;
  if (magic == "P5") {
    img.channels = 1;
  } else if (magic == "P6") {
    img.channels = 3;
  } else {
    throw ParseError(path.string(), 0, 0, "expected P5 or P6 image");
  }
  try {
    img.width = std::stoi(next_token());
    img.height = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (maxval != 255) throw ParseError(path.string(), 0, pos, "only 8-bit images are supported");
  } catch (const std::invalid_argument&) {
    throw ParseError(path.string(), 0, pos, "malformed image header");
  }
  ++pos;  // single whitespace after maxval
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height * img.channels;
  if (img.width <= 0 || img.height <= 0 || bytes.size() < pos + n) {
    throw ParseError(path.string(), 0, pos, "truncated image payload");
  }
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return img;
}

void write_pgm(const fs::path& path, int width, int height, const std::vector<unsigned char>& pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * height) {
    throw DimensionError("pgm payload size mismatch");
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

}  // namespace egogaze::io
