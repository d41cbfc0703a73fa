#include "egogaze/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "egogaze/errors.hpp"
#include "egogaze/io.hpp"

namespace egogaze::report {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 400;
constexpr int kMargin = 60;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range value_range(const Table& t, bool include_zero) {
  Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& row : t.values) {
    for (double v : row) {
      if (std::isnan(v)) continue;
      r.lo = std::min(r.lo, v);
      r.hi = std::max(r.hi, v);
    }
  }
  if (!std::isfinite(r.lo)) return {0.0, 1.0};
  if (include_zero) {
    r.lo = std::min(r.lo, 0.0);
    r.hi = std::max(r.hi, 0.0);
  }
  if (r.hi - r.lo < 1e-12) {
    r.lo -= 0.5;
    r.hi += 0.5;
  }
  return r;
}

std::string header(const Table& t) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  s << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(t.title)
    << "</text>\n";
  return s.str();
}

std::string y_axis(const Range& r) {
  std::ostringstream s;
  const double top = kMargin;
  const double bottom = kHeight - kMargin;
  s << "<line x1=\"" << kMargin << "\" y1=\"" << top << "\" x2=\"" << kMargin << "\" y2=\"" << bottom
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = r.lo + (r.hi - r.lo) * i / 4.0;
    const double y = bottom - (bottom - top) * i / 4.0;
    s << "<text x=\"" << kMargin - 4 << "\" y=\"" << px(y + 4) << "\" text-anchor=\"end\">" << format_number(v)
      << "</text>\n";
  }
  return s.str();
}

const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  return colors[i % 6];
}

}  // namespace

void Table::add_row(std::string label, std::vector<double> row) {
  row_labels.push_back(std::move(label));
  values.push_back(std::move(row));
}

void Table::validate() const {
  if (columns.empty() || row_labels.empty()) throw Error("report table '" + title + "' is empty");
  if (values.size() != row_labels.size()) throw DimensionError("report table '" + title + "' has unlabeled rows");
  for (const auto& r : values) {
    if (r.size() != columns.size()) throw DimensionError("report table '" + title + "' is ragged");
  }
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v == 0.0 ? 0.0 : v);
  return buf;
}

std::string to_csv(const Table& t) {
  t.validate();
  std::string out = csv_field(t.label_header);
  for (const auto& c : t.columns) out += "," + csv_field(c);
  out += "\n";
  for (std::size_t r = 0; r < t.values.size(); ++r) {
    out += csv_field(t.row_labels[r]);
    for (double v : t.values[r]) out += "," + format_number(v);
    out += "\n";
  }
  return out;
}

std::string bar_svg(const Table& t, std::size_t column) {
  t.validate();
  if (column >= t.columns.size()) throw Error("bar plot column out of range");
  const Range r = value_range(t, true);
  std::ostringstream s;
  s << header(t) << y_axis(r);
  const double top = kMargin;
  const double bottom = kHeight - kMargin;
  const double span = kWidth - 2.0 * kMargin;
  const double slot = span / static_cast<double>(t.values.size());
  auto ypos = [&](double v) { return bottom - (v - r.lo) / (r.hi - r.lo) * (bottom - top); };
  const double zero = ypos(0.0);
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    const double v = std::isnan(t.values[i][column]) ? 0.0 : t.values[i][column];
    const double x = kMargin + slot * i + slot * 0.15;
    const double y = std::min(ypos(v), zero);
    s << "<rect x=\"" << px(x) << "\" y=\"" << px(y) << "\" width=\"" << px(slot * 0.7) << "\" height=\""
      << px(std::abs(ypos(v) - zero)) << "\" fill=\"" << palette(0) << "\"/>\n";
    s << "<text x=\"" << px(x + slot * 0.35) << "\" y=\"" << px(bottom + 14) << "\" text-anchor=\"middle\">"
      << escape(t.row_labels[i]) << "</text>\n";
  }
  s << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
    << escape(t.columns[column]) << "</text>\n</svg>\n";
  return s.str();
}

std::string line_svg(const Table& t) {
  t.validate();
  std::vector<double> xs;
  for (const auto& l : t.row_labels) {
    try {
      xs.push_back(std::stod(l));
    } catch (const std::exception&) {
      throw Error("line plot row label '" + l + "' is not numeric");
    }
  }
  const double xlo = *std::min_element(xs.begin(), xs.end());
  double xhi = *std::max_element(xs.begin(), xs.end());
  if (xhi - xlo < 1e-12) xhi = xlo + 1.0;
  const Range r = value_range(t, false);
  const double top = kMargin;
  const double bottom = kHeight - kMargin;
  auto xpos = [&](double x) { return kMargin + (x - xlo) / (xhi - xlo) * (kWidth - 2.0 * kMargin); };
  auto ypos = [&](double v) { return bottom - (v - r.lo) / (r.hi - r.lo) * (bottom - top); };
  std::ostringstream s;
  s << header(t) << y_axis(r);
  s << "<line x1=\"" << kMargin << "\" y1=\"" << bottom << "\" x2=\"" << kWidth - kMargin << "\" y2=\"" << bottom
    << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    s << "<text x=\"" << px(xpos(xs[i])) << "\" y=\"" << px(bottom + 14) << "\" text-anchor=\"middle\">"
      << escape(t.row_labels[i]) << "</text>\n";
  }
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    s << "<polyline fill=\"none\" stroke=\"" << palette(c) << "\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (std::isnan(t.values[i][c])) continue;
      s << (first ? "" : " ") << px(xpos(xs[i])) << "," << px(ypos(t.values[i][c]));
      first = false;
    }
    s << "\"/>\n";
    s << "<text x=\"" << kWidth - kMargin + 4 << "\" y=\"" << kMargin + 14 * c << "\" fill=\"" << palette(c) << "\">"
      << escape(t.columns[c]) << "</text>\n";
  }
  s << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
    << escape(t.label_header) << "</text>\n</svg>\n";
  return s.str();
}

std::string heat_svg(const Table& t) {
  t.validate();
  const Range r = value_range(t, false);
  const double cw = (kWidth - 2.0 * kMargin) / static_cast<double>(t.columns.size());
  const double ch = (kHeight - 2.0 * kMargin) / static_cast<double>(t.values.size());
  std::ostringstream s;
  s << header(t);
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    for (std::size_t j = 0; j < t.columns.size(); ++j) {
      const double v = t.values[i][j];
      std::string fill = "#cccccc";
      if (!std::isnan(v)) {
        const int shade = static_cast<int>(std::lround(255.0 * (1.0 - (v - r.lo) / (r.hi - r.lo))));
        char buf[16];
        std::snprintf(buf, sizeof buf, "#%02x%02xff", shade, shade);
        fill = buf;
      }
      const double x = kMargin + cw * j;
      const double y = kMargin + ch * i;
      s << "<rect x=\"" << px(x) << "\" y=\"" << px(y) << "\" width=\"" << px(cw) << "\" height=\"" << px(ch)
        << "\" fill=\"" << fill << "\" stroke=\"white\"/>\n";
      s << "<text x=\"" << px(x + cw / 2) << "\" y=\"" << px(y + ch / 2 + 4) << "\" text-anchor=\"middle\">"
        << format_number(v).substr(0, 5) << "</text>\n";
    }
    s << "<text x=\"" << kMargin - 4 << "\" y=\"" << px(kMargin + ch * i + ch / 2 + 4) << "\" text-anchor=\"end\">"
      << escape(t.row_labels[i]) << "</text>\n";
  }
  for (std::size_t j = 0; j < t.columns.size(); ++j) {
    s << "<text x=\"" << px(kMargin + cw * j + cw / 2) << "\" y=\"" << kMargin - 6 << "\" text-anchor=\"middle\">"
      << escape(t.columns[j]) << "</text>\n";
  }
  s << "<text x=\"12\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 12 " << kHeight / 2
    << ")\" text-anchor=\"middle\">" << escape(t.label_header) << "</text>\n</svg>\n";
  return s.str();
}

void emit_report(const Table& table, const std::filesystem::path& dir, const std::string& stem, PlotKind kind) {
  table.validate();
  std::filesystem::create_directories(dir);
  io::write_text(dir / (stem + ".csv"), to_csv(table));
  std::string svg;
  switch (kind) {
    case PlotKind::bar: svg = bar_svg(table); break;
    case PlotKind::line: svg = line_svg(table); break;
    case PlotKind::heat: svg = heat_svg(table); break;
  }
  io::write_text(dir / (stem + ".svg"), svg);
}

nlohmann::json run_manifest(const std::string& command, const nlohmann::json& config, std::uint64_t seed) {
  return {{"tool", "egogaze"}, {"version", kVersion}, {"command", command}, {"seed", seed}, {"config", config}};
}

void write_manifest(const std::filesystem::path& path, const nlohmann::json& manifest) {
  io::write_text(path, manifest.dump(2) + "\n");
}

}  // namespace egogaze::report
