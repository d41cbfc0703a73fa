#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "egogaze/core.hpp"
#include "egogaze/image.hpp"
#include "egogaze/io.hpp"
#include "oracles.hpp"

using namespace egogaze;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "egogaze_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

FixationTrace trace_of(std::vector<std::pair<double, double>> pts) {
  FixationTrace t{"seq", "subj", {}};
  int f = 0;
  for (auto [x, y] : pts) t.records.push_back({f++, x, y, true});
  return t;
}

}  // namespace

TEST_CASE("rasterize uses floor then clamp") {
  auto check = [](double x, double y, int k, int row, int col) {
    const GridMap m = rasterize_fixation(x, y, k);
    CHECK(m(row, col) == 1.0);
    CHECK(m.sum() == 1.0);
  };
  check(0.5, 0.5, 2, 1, 1);
  check(0.0, 0.0, 20, 0, 0);
  check(0.976, 0.51, 20, 10, 19);
  check(1.0, 1.0, 20, 19, 19);
  CHECK_THROWS_AS(rasterize_fixation(1.2, 0.5, 20), CoordinateError);
  CHECK_THROWS_AS(rasterize_fixation(0.5, -0.01, 20), CoordinateError);
  CHECK_THROWS_AS(rasterize_fixation(std::nan(""), 0.5, 20), CoordinateError);
}

TEST_CASE("rasterize partitions the unit square") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const GridMap m = rasterize_fixation(u(rng), u(rng), 7);
    CHECK(m.sum() == 1.0);
    CHECK(m.max() == 1.0);
  }
}

TEST_CASE("gaussian kernel") {
  const GaussianKernel g;
  CHECK(g.width() == 5);
  CHECK(g.sigma() == 1.0);
  double s = 0.0;
  for (double t : g.taps()) s += t;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS(GaussianKernel(4, 1.0));
  CHECK_THROWS(GaussianKernel(5, 0.0));
}

TEST_CASE("smooth_map matches the direct convolution oracle") {
  const GaussianKernel kernel;
  SUBCASE("zero map") { CHECK(smooth_map(GridMap(20), kernel) == GridMap(20)); }
  SUBCASE("center blob is symmetric") {
    const GridMap m = smooth_map(GridMap::one_hot(21, {10, 10}), kernel);
    CHECK(m.argmax() == static_cast<std::size_t>(10 * 21 + 10));
    CHECK(m.sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (int d = 1; d <= 2; ++d) {
      CHECK(m(10 - d, 10) == m(10 + d, 10));
      CHECK(m(10, 10 - d) == m(10 + d, 10));
    }
  }
  SUBCASE("corner loses mass") {
    const GridMap one = GridMap::one_hot(20, {0, 0});
    const GridMap m = smooth_map(one, kernel);
    CHECK(m.sum() < 1.0);
    const GridMap ref = oracle::gaussian_smooth(one, 5, 1.0);
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(std::abs(m[i] - ref[i]) < 1e-12);
  }
  SUBCASE("random maps and linearity") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GridMap a(20), b(20);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = u(rng);
      b[i] = u(rng);
    }
    const GridMap sa = smooth_map(a, kernel), sb = smooth_map(b, kernel);
    const GridMap ref = oracle::gaussian_smooth(a, 5, 1.0);
    const GridMap lin = smooth_map(2.5 * a + 0.5 * b, kernel);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(std::abs(sa[i] - ref[i]) < 1e-12);
      CHECK(std::abs(lin[i] - (2.5 * sa[i] + 0.5 * sb[i])) < 1e-12);
    }
  }
}

TEST_CASE("build_targets") {
  const GaussianKernel kernel;
  SUBCASE("single center frame") {
    const auto t = build_targets(trace_of({{0.5, 0.5}}), 20, kernel);
    REQUIRE(t.rows() == 1);
    CHECK(t.data.row(0) == linearize(smooth_map(rasterize_fixation(0.5, 0.5, 20), kernel)));
  }
  SUBCASE("constant gaze gives identical rows") {
    const auto t = build_targets(trace_of({{0.3, 0.6}, {0.3, 0.6}, {0.3, 0.6}}), 20, kernel);
    CHECK(t.data.row(0) == t.data.row(1));
    CHECK(t.data.row(1) == t.data.row(2));
  }
  SUBCASE("rows match the composed oracle") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 10; ++i) pts.emplace_back(u(rng), u(rng));
    const auto t = build_targets(trace_of(pts), 20, kernel);
    for (int i = 0; i < 10; ++i) {
      const GridMap ref = oracle::gaussian_smooth(rasterize_fixation(pts[i].first, pts[i].second, 20), 5, 1.0);
      for (int c = 0; c < 400; ++c) CHECK(std::abs(t.data(i, c) - ref[static_cast<std::size_t>(c)]) < 1e-12);
    }
  }
  SUBCASE("gaps are reported") {
    FixationTrace t = trace_of({{0.1, 0.1}, {0.2, 0.2}});
    t.records[1].frame = 3;
    try {
      build_targets(t, 20, kernel);
      FAIL("expected a gap error");
    } catch (const GapError& e) {
      CHECK(e.missing_frames() == std::vector<int>{1, 2});
    }
  }
}

TEST_CASE("matrix and map files round-trip") {
  const fs::path dir = scratch("io");
  FeatureMatrix f;
  f.data.resize(2, 3);
  f.data << 1.5, -2.0, 0.25, 3.0, 4.0, 1e-3;
  io::save_feature_matrix(dir / "f.f32", f);
  const auto g = io::load_feature_matrix(dir / "f.f32");
  REQUIRE(g.rows() == 2);
  REQUIRE(g.cols() == 3);
  for (Eigen::Index i = 0; i < 6; ++i) CHECK(g.data.data()[i] == static_cast<double>(static_cast<float>(f.data.data()[i])));
  CHECK(fs::exists(dir / "f.hdr.json"));

  // once values are f32-representable the round trip is bit-exact
  io::save_feature_matrix(dir / "g.f32", g);
  CHECK(io::load_feature_matrix(dir / "g.f32").data == g.data);

  const GridMap m = smooth_map(GridMap::one_hot(20, {4, 7}), GaussianKernel());
  io::save_map(dir / "m.f32", m);
  const GridMap back = io::load_map(dir / "m.f32");
  io::save_map(dir / "m2.f32", back);
  CHECK(io::load_map(dir / "m2.f32") == back);

  std::vector<GridMap> seq{back, back * 0.5, GridMap(20)};
  io::save_map_sequence(dir / "seq", seq);
  CHECK(io::load_map_sequence(dir / "seq") == seq);
}

TEST_CASE("loaders reject malformed input") {
  const fs::path dir = scratch("bad");
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return dir / name;
  };
  SUBCASE("gaze out of range names the line") {
    const auto p = write("bad.csv", "frame,x,y,valid\n0,0.5,0.5,1\n1,1.2,0.5,1\n");
    try {
      io::load_fixation_log(p);
      FAIL("expected a coordinate error");
    } catch (const CoordinateError& e) {
      CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
  }
  SUBCASE("malformed header") {
    CHECK_THROWS_AS(io::load_fixation_log(write("h.csv", "frame,x,y\n0,0.5,0.5\n")), ParseError);
  }
  SUBCASE("NaN in fixation log") {
    CHECK_THROWS_AS(io::load_fixation_log(write("n.csv", "frame,x,y,valid\n0,nan,0.5,1\n")), ParseError);
  }
  SUBCASE("header dimensions disagree with payload") {
    FeatureMatrix f;
    f.data = Eigen::MatrixXd::Ones(2, 3);
    io::save_feature_matrix(dir / "f.f32", f);
    write("f.hdr.json", R"({"rows":3,"cols":3,"dtype":"f32le"})");
    CHECK_THROWS_AS(io::load_feature_matrix(dir / "f.f32"), DimensionError);
  }
  SUBCASE("non-finite payload") {
    const float bad[2] = {1.0f, std::numeric_limits<float>::infinity()};
    std::ofstream(dir / "x.f32", std::ios::binary).write(reinterpret_cast<const char*>(bad), sizeof bad);
    write("x.hdr.json", R"({"rows":1,"cols":2,"dtype":"f32le"})");
    CHECK_THROWS_AS(io::load_matrix(dir / "x.f32"), ParseError);
  }
}

TEST_CASE("repeated samples for one frame are averaged with a warning") {
  const fs::path dir = scratch("dup");
  std::ofstream(dir / "t.csv") << "frame,x,y,valid\n0,0.2,0.4,1\n0,0.4,0.6,1\n1,0.5,0.5,1\n";
  std::vector<std::string> warnings;
  const auto t = io::load_fixation_log(dir / "t.csv", &warnings);
  REQUIRE(t.size() == 2);
  CHECK(t.records[0].x == doctest::Approx(0.3));
  CHECK(t.records[0].y == doctest::Approx(0.5));
  CHECK(!warnings.empty());
}

TEST_CASE("builtin descriptor") {
  Image flat(64, 64, 1, 100.0);
  const auto d = builtin_descriptor(flat);
  REQUIRE(d.size() == kDescriptorLength);
  CHECK(d.isZero());

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  Image img(64, 64);
  for (auto& v : img.data()) v = u(rng);
  CHECK(builtin_descriptor(img) == builtin_descriptor(img));

  // intensity block is the z-scored 8x8 block average
  const GridMap blocks = block_average(img, kDescriptorGrid);
  double mean = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < blocks.size(); ++i) mean += blocks[i] / 64.0;
  for (std::size_t i = 0; i < blocks.size(); ++i) ss += (blocks[i] - mean) * (blocks[i] - mean) / 64.0;
  const auto desc = builtin_descriptor(img);
  for (int i = 0; i < 64; ++i) CHECK(desc(i) == doctest::Approx((blocks[static_cast<std::size_t>(i)] - mean) / std::sqrt(ss)));

  // an 8-pixel vertical shift moves the intensity block by one row
  Image shifted(64, 64);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) shifted.at(x, y) = img.at(x, (y + 8) % 64);
  }
  const auto ds = builtin_descriptor(shifted);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) CHECK(ds(r * 8 + c) == doctest::Approx(desc(((r + 1) % 8) * 8 + c)));
  }
  CHECK_THROWS(builtin_descriptor(Image(16, 16)));
}
