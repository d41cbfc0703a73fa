#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace egogaze::report {

struct Table {
  std::string title;
  std::string label_header = "label";
  std::vector<std::string> columns;
  std::vector<std::string> row_labels;
  std::vector<std::vector<double>> values;  // [row][column]

  void add_row(std::string label, std::vector<double> row);
  /// Throws when the table is empty or ragged.
  void validate() const;
};

enum class PlotKind { bar, line, heat };

/// Fixed-precision rendering shared by CSV and SVG output; NaN prints "nan".
std::string format_number(double v);

std::string to_csv(const Table& table);
/// One bar per row for the given column.
std::string bar_svg(const Table& table, std::size_t column = 0);
/// Row labels parsed as x positions; one polyline per column.
std::string line_svg(const Table& table);
/// Rows x columns grid shaded by value, with axis labels.
std::string heat_svg(const Table& table);

/// Writes <stem>.csv and <stem>.svg into `dir`.
void emit_report(const Table& table, const std::filesystem::path& dir, const std::string& stem, PlotKind kind);

inline constexpr const char* kVersion = "0.1.0";

/// Everything needed to replay a run; no timestamps or host details.
nlohmann::json run_manifest(const std::string& command, const nlohmann::json& config, std::uint64_t seed);
void write_manifest(const std::filesystem::path& path, const nlohmann::json& manifest);

}  // namespace egogaze::report
