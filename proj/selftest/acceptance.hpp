#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "egogaze/report.hpp"

namespace egogaze::acceptance {

struct Check {
  std::string name;
  double value = 0.0;
  std::string bound;
  bool pass = false;
};

struct Artifact {
  std::string stem;
  report::Table table;
  report::PlotKind kind = report::PlotKind::bar;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  double limit_seconds = 0.0;
  double seconds = 0.0;
  std::vector<Check> checks;
  std::vector<Artifact> artifacts;

  void check(std::string name, double value, std::string bound, bool pass);
  bool checks_passed() const;
  bool within_time() const { return seconds < limit_seconds; }
  bool passed() const { return checks_passed() && within_time(); }
  /// Deterministic record of the checks; wall time is left out on purpose so
  /// reruns are byte-identical.
  nlohmann::json to_json() const;
};

struct Options {
  std::uint64_t seed = 0;
  int jobs = 1;
};

inline constexpr int kCriterionCount = 9;

/// Runs criterion `id` (1..9) and times it.
CriterionResult run_criterion(int id, const Options& options);

/// "[PASS] 3 exact recovery: ... (0.12 s < 30 s)"
std::string format_line(const CriterionResult& result);

}  // namespace egogaze::acceptance
