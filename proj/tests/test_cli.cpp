#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "egogaze/io.hpp"

using namespace egogaze;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(EGOGAZE_TOOL) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "egogaze_tests" / "cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Features carry the gaze position, so a linear model can recover it.
void write_inputs(const fs::path& dir, int frames) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.15, 0.85);
  FixationTrace t{"seq", "a", {}};
  Eigen::MatrixXd f(frames, 3);
  for (int i = 0; i < frames; ++i) {
    const double x = u(rng), y = u(rng);
    t.records.push_back({i, x, y, true});
    f.row(i) << 1.0, x, y;
  }
  io::save_fixation_log(dir / "fix.csv", t);
  FeatureMatrix fm;
  fm.data = f;
  io::save_feature_matrix(dir / "features.f32", fm);
}

}  // namespace

TEST_CASE("cli exit codes") {
  CHECK(run("") == 2);
  CHECK(run("no-such-command") == 2);
  CHECK(run("eval --pred /nonexistent --fix /nonexistent") == 2);
  CHECK(run("baselines --fix") == 2);
  CHECK(run("--help") == 0);
}

TEST_CASE("cli pipeline") {
  const auto dir = scratch("pipeline");
  write_inputs(dir, 120);
  const std::string fix = (dir / "fix.csv").string(), features = (dir / "features.f32").string();

  REQUIRE(run("baselines --fix " + fix + " --train " + fix + " --out " + (dir / "base").string()) == 0);
  CHECK(fs::exists(dir / "base" / "baselines.csv"));
  CHECK(fs::exists(dir / "base" / "manifest.json"));

  REQUIRE(run("fit-regression --features " + features + " --fix " + fix + " --model " + (dir / "w.f32").string() +
              " --out " + (dir / "fit").string()) == 0);
  REQUIRE(run("predict --model " + (dir / "w.f32").string() + " --features " + features + " --out " +
              (dir / "pred").string()) == 0);
  REQUIRE(fs::is_directory(dir / "pred" / "maps"));
  REQUIRE(run("eval --pred " + (dir / "pred" / "maps").string() + " --fix " + fix + " --out " +
              (dir / "eval").string()) == 0);
  const auto summary = read_json(dir / "eval" / "summary.json");
  CHECK(summary["frames_scored"] == 120);
  CHECK(summary["auc_mean"].get<double>() > 0.6);
  CHECK(fs::exists(dir / "eval" / "per_frame.csv"));

  const auto manifest = read_json(dir / "eval" / "manifest.json");
  CHECK(manifest["seed"] == 1);

  // a sequence length mismatch is a runtime error, not a usage error
  FixationTrace shorter{"seq", "a", {{0, 0.5, 0.5, true}}};
  io::save_fixation_log(dir / "short.csv", shorter);
  CHECK(run("eval --pred " + (dir / "pred" / "maps").string() + " --fix " + (dir / "short.csv").string() +
            " --out " + (dir / "bad").string()) == 1);
}

TEST_CASE("cli config precedence") {
  const auto dir = scratch("config");
  write_inputs(dir, 20);
  const std::string fix = (dir / "fix.csv").string();
  {
    std::ofstream cfg(dir / "run.toml");
    cfg << "seed = 5\nk = 10\n";
  }
  const std::string base = "baselines --fix " + fix + " --config " + (dir / "run.toml").string() + " --out ";
  REQUIRE(run(base + (dir / "a").string()) == 0);
  auto m = read_json(dir / "a" / "manifest.json");
  CHECK(m["seed"] == 5);
  CHECK(m["config"]["k"] == "10");

  REQUIRE(run(base + (dir / "b").string() + " --seed 8") == 0);
  CHECK(read_json(dir / "b" / "manifest.json")["seed"] == 8);

  REQUIRE(run("baselines --fix " + fix + " --out " + (dir / "c").string() + " --seed 4") == 0);
  CHECK(read_json(dir / "c" / "manifest.json")["seed"] == 4);

  const std::string env = "EGOGAZE_SEED=6 ";
  const int status = std::system((env + EGOGAZE_TOOL + " baselines --fix " + fix + " --out " + (dir / "d").string() +
                                  " > /dev/null 2>&1").c_str());
  REQUIRE(WIFEXITED(status));
  REQUIRE(WEXITSTATUS(status) == 0);
  CHECK(read_json(dir / "d" / "manifest.json")["seed"] == 6);
}
