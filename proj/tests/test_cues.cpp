#include <doctest.h>

#include <random>

#include "egogaze/baselines.hpp"
#include "egogaze/cues.hpp"
#include "egogaze/metrics.hpp"
#include "oracles.hpp"

using namespace egogaze;
using namespace egogaze::cues;

namespace {

PointAnnotation click(int frame, const std::string& subj, double x, double y) {
  return {frame, PointKind::manipulation_click, subj, x, y};
}

GridMap random_unit_map(int k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GridMap m(k);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = u(rng);
  return m;
}

HandMask mask_with_blocks(int size, const std::vector<std::array<int, 4>>& blocks) {
  std::vector<unsigned char> px(static_cast<std::size_t>(size * size), 0);
  for (const auto& b : blocks) {
    for (int y = b[1]; y < b[1] + b[3]; ++y) {
      for (int x = b[0]; x < b[0] + b[2]; ++x) px[static_cast<std::size_t>(y * size + x)] = 1;
    }
  }
  return HandMask(0, size, size, px);
}

}  // namespace

TEST_CASE("point maps") {
  const GaussianKernel kernel;
  CHECK(point_to_map({}, 20, kernel) == GridMap(20));

  const auto one = point_to_map({click(0, "a", 0.31, 0.64)}, 20, kernel);
  CHECK(one == smooth_map(rasterize_fixation(0.31, 0.64, 20), kernel));
  std::vector<PointAnnotation> five(5, click(0, "a", 0.31, 0.64));
  const auto stacked = point_to_map(five, 20, kernel);
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(stacked[i] == doctest::Approx(5.0 * one[i]).epsilon(1e-12));

  const auto a = point_to_map({click(0, "a", 0.1, 0.2)}, 20, kernel);
  const auto b = point_to_map({click(0, "a", 0.7, 0.9)}, 20, kernel);
  const auto ab = point_to_map({click(0, "a", 0.1, 0.2), click(0, "a", 0.7, 0.9)}, 20, kernel);
  for (std::size_t i = 0; i < ab.size(); ++i) CHECK(ab[i] == doctest::Approx(a[i] + b[i]).epsilon(1e-12));

  const auto seq = point_maps({click(2, "a", 0.5, 0.5), click(0, "b", 0.1, 0.1)}, 4, 20, kernel);
  REQUIRE(seq.size() == 4);
  CHECK(seq[1] == GridMap(20));
  CHECK(seq[3] == GridMap(20));
  CHECK(seq[2] == point_to_map({click(2, "a", 0.5, 0.5)}, 20, kernel));
}

TEST_CASE("complement") {
  std::mt19937_64 rng(1);
  const GridMap m = random_unit_map(20, rng);
  const GridMap c = complement(m);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(c[i] == 1.0 - m[i]);
  const GridMap cc = complement(c);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(std::abs(cc[i] - m[i]) < 1e-15);
  GridMap bad = m;
  bad[7] = 1.5;
  CHECK_THROWS_AS(complement(bad), Error);
  bad[7] = -0.1;
  CHECK_THROWS_AS(complement(bad), Error);
}

TEST_CASE("mp augmentation") {
  std::mt19937_64 rng(2);
  const GaussianKernel kernel;
  for (int i = 0; i < 20; ++i) {
    const GridMap p = random_unit_map(20, rng), q = random_unit_map(20, rng);
    const GridMap pq = augment(p, q), qp = augment(q, p);
    for (std::size_t j = 0; j < pq.size(); ++j) CHECK(pq[j] == doctest::Approx(qp[j]).epsilon(1e-14));
    CHECK(pq.max() == doctest::Approx(1.0));

    const GridMap same = augment(p, GridMap(20));
    const Cell f{i % 20, (11 * i) % 20};
    CHECK(metrics::auc(same, f) == metrics::auc(p, f));
    CHECK(same.argmax() == p.argmax());

    // adding the fixation's own smoothed map never lowers AUC
    const FixationTrace t{"s", "a", {{0, (f.col + 0.5) / 20, (f.row + 0.5) / 20, true}}};
    const GridMap fom = baselines::fom(t, 20, kernel)[0];
    CHECK(metrics::auc(augment(p, fom, 2.5), f) >= metrics::auc(p, f));
  }
  CHECK_THROWS_AS(augment(GridMap(20), GridMap(10)), DimensionError);
}

TEST_CASE("hand masks") {
  CHECK(hand_category(mask_with_blocks(100, {})) == HandCategory::no_hands);
  CHECK(hand_category(mask_with_blocks(100, {{10, 10, 10, 10}})) == HandCategory::one_hand);
  const auto two = mask_with_blocks(100, {{10, 10, 10, 10}, {60, 60, 10, 10}});
  CHECK(two.hand_count() == 2);
  CHECK(hand_category(two) == HandCategory::two_hands);
  // diagonal contact joins components under 8-connectivity
  const auto touching = mask_with_blocks(100, {{10, 10, 10, 10}, {20, 20, 10, 10}});
  CHECK(touching.component_count() == 1);
  // 49 pixels of 10000 is below the 0.5% floor; 50 is not
  const auto specks = mask_with_blocks(100, {{10, 10, 10, 10}, {60, 60, 7, 7}});
  CHECK(specks.component_count() == 2);
  CHECK(specks.hand_count() == 1);
  CHECK(mask_with_blocks(100, {{10, 10, 10, 10}, {60, 60, 10, 5}}).hand_count() == 2);
  CHECK(mask_with_blocks(100, {{0, 0, 10, 10}, {40, 40, 10, 10}, {80, 80, 10, 10}}).hand_count() == 2);
  CHECK(std::string(to_string(HandCategory::two_hands)).size() > 0);

  CHECK_THROWS_AS(HandMask(0, 10, 10, std::vector<unsigned char>(99, 0)), DimensionError);
  CHECK_THROWS(HandMask(0, 2, 1, {0, 2}));

  const GridMap cover = mask_map(mask_with_blocks(100, {{0, 0, 50, 50}}), 2);
  CHECK(cover(0, 0) == doctest::Approx(1.0));
  CHECK(cover(1, 1) == 0.0);
}

TEST_CASE("nss by hand category") {
  const GaussianKernel kernel;
  FixationTrace t{"s", "a", {}};
  for (int i = 0; i < 6; ++i) t.records.push_back({i, 0.1 + 0.12 * i, 0.5, true});
  const auto maps = baselines::fom(t, 20, kernel);
  std::vector<HandMask> masks;
  for (int i : {1, 3}) {
    auto m = mask_with_blocks(100, {{10, 10, 10, 10}});
    masks.push_back(HandMask(i, 100, 100, m.mask()));
  }
  masks.push_back(HandMask(4, 100, 100, mask_with_blocks(100, {{10, 10, 10, 10}, {60, 60, 10, 10}}).mask()));
  const auto r = nss_by_hand_category(maps, t, masks);
  CHECK(r.frames[0] == 3);
  CHECK(r.frames[1] == 2);
  CHECK(r.frames[2] == 1);
  const double fom_nss = metrics::nss(maps[0], fixation_cell(t.records[0].x, t.records[0].y, 20));
  CHECK(r.mean[1] == doctest::Approx(fom_nss).epsilon(1e-9));
  CHECK_THROWS_AS(nss_by_hand_category({maps[0]}, t, masks), DimensionError);
}

TEST_CASE("click agreement") {
  const GaussianKernel kernel;
  std::vector<PointAnnotation> same;
  for (int f = 0; f < 10; ++f) {
    same.push_back(click(f, "a", 0.1 * f, 0.4));
    same.push_back(click(f, "b", 0.1 * f, 0.4));
  }
  CHECK(click_agreement(same, 10, 20, kernel) == doctest::Approx(1.0).epsilon(1e-12));

  const std::vector<PointAnnotation> opposite{click(0, "a", 0.05, 0.05), click(0, "b", 0.95, 0.95)};
  CHECK(click_agreement(opposite, 1, 20, kernel) < 0.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<PointAnnotation> clicks;
  for (int f = 0; f < 8; ++f) {
    for (const char* s : {"a", "b", "c"}) clicks.push_back(click(f, s, u(rng), u(rng)));
  }
  auto video_map = [&](const std::string& s) {
    GridMap sum(20);
    for (int f = 0; f < 8; ++f) {
      std::vector<PointAnnotation> mine;
      for (const auto& c : clicks) {
        if (c.frame == f && c.subject_id == s) mine.push_back(c);
      }
      sum += point_to_map(mine, 20, kernel);
    }
    return sum * (1.0 / 8.0);
  };
  const GridMap ma = video_map("a"), mb = video_map("b"), mc = video_map("c");
  const double ref = (oracle::pearson_direct(ma, mb) + oracle::pearson_direct(ma, mc) + oracle::pearson_direct(mb, mc)) / 3.0;
  CHECK(click_agreement(clicks, 8, 20, kernel) == doctest::Approx(ref).epsilon(1e-12));

  CHECK_THROWS(click_agreement({click(0, "a", 0.5, 0.5)}, 1, 20, kernel));
}
