#include <doctest.h>

#include <cmath>
#include <random>

#include "egogaze/baselines.hpp"
#include "egogaze/metrics.hpp"
#include "oracles.hpp"

using namespace egogaze;

namespace {

GridMap random_map(int k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GridMap m(k);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = u(rng);
  return m;
}

}  // namespace

TEST_CASE("zscore_map") {
  CHECK(metrics::zscore_map(GridMap(4, 3.0)) == GridMap(4));
  const GridMap z = metrics::zscore_map(GridMap(2, {1, 0, 0, 0}));
  CHECK(z[0] == doctest::Approx(0.75 / 0.4330127018922193));
  for (int i = 1; i < 4; ++i) CHECK(z[static_cast<std::size_t>(i)] == doctest::Approx(-0.5773502691896258));
  std::mt19937_64 rng(1);
  const GridMap s = random_map(20, rng);
  const GridMap zs = metrics::zscore_map(s);
  const GridMap zz = metrics::zscore_map(zs);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(zz[i] - zs[i]) < 1e-12);
}

TEST_CASE("nss") {
  CHECK(metrics::nss(GridMap(20, 0.7), {3, 3}) == 0.0);
  CHECK(metrics::nss_checked(GridMap(20, 0.7), {3, 3}).degenerate);
  CHECK(metrics::nss(GridMap::one_hot(2, {0, 1}), {0, 1}) == doctest::Approx(1.7320508075688772));
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const GridMap s = random_map(20, rng);
    const Cell f{i % 20, (7 * i) % 20};
    CHECK(std::abs(metrics::nss(s, f) - oracle::nss_direct(s, f)) < 1e-12);
    GridMap c(20);
    for (std::size_t j = 0; j < s.size(); ++j) c[j] = 1.0 - s[j];
    CHECK(std::abs(metrics::nss(c, f) + metrics::nss(s, f)) < 1e-9);
  }
}

TEST_CASE("auc") {
  CHECK(metrics::auc(GridMap(20, 0.2), {5, 5}) == 0.5);
  CHECK(metrics::auc(GridMap::one_hot(20, {5, 5}), {5, 5}) == 1.0);
  CHECK(metrics::auc(GridMap(2, {0.9, 0.1, 0.2, 0.3}), {1, 1}) == doctest::Approx(2.0 / 3.0));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    GridMap s = random_map(10, rng);
    const Cell f{i % 10, (3 * i) % 10};
    CHECK(metrics::auc(s, f) == doctest::Approx(oracle::auc_pairwise(s, f)).epsilon(1e-12));
    GridMap c(10), e(10), cube(10);
    for (std::size_t j = 0; j < s.size(); ++j) {
      c[j] = 1.0 - s[j];
      e[j] = std::exp(s[j]);
      cube[j] = s[j] * s[j] * s[j];
    }
    CHECK(metrics::auc(c, f) == doctest::Approx(1.0 - metrics::auc(s, f)).epsilon(1e-12));
    CHECK(metrics::auc(e, f) == metrics::auc(s, f));
    CHECK(metrics::auc(cube, f) == metrics::auc(s, f));
  }
  const GridMap m(2, {0.9, 0.1, 0.2, 0.3});
  CHECK(metrics::auc(m, std::vector<Cell>{{0, 0}, {1, 1}}) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
}

TEST_CASE("map_correlation") {
  std::mt19937_64 rng(4);
  const GridMap a = random_map(20, rng), b = random_map(20, rng);
  CHECK(metrics::map_correlation(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  GridMap c(20);
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = 1.0 - a[i];
  CHECK(metrics::map_correlation(a, c) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::abs(metrics::map_correlation(a, b) - oracle::pearson_direct(a, b)) < 1e-12);
  CHECK(metrics::map_correlation(a, GridMap(20, 1.0)) == 0.0);
}

TEST_CASE("score_sequence skips invalid frames") {
  FixationTrace t{"s", "p", {{0, 0.5, 0.5, true}, {1, 0.1, 0.1, false}, {2, 0.9, 0.2, true}}};
  const auto maps = baselines::fom(t, 20, GaussianKernel());
  const auto rep = metrics::score_sequence(maps, t);
  CHECK(rep.frames_scored == 2);
  CHECK(rep.per_frame.size() == 2);
  CHECK(rep.per_frame[1].frame == 2);
  CHECK(rep.auc_mean == 1.0);
  CHECK(rep.to_csv().rfind("frame,nss,auc\n", 0) == 0);
  CHECK(rep.summary()["frames_scored"] == 2);
  CHECK_THROWS(metrics::score_sequence({maps[0]}, t));
}

TEST_CASE("central gaussian") {
  const GridMap g = baselines::central_gaussian(20);
  CHECK(g.sum() == doctest::Approx(1.0));
  CHECK(g(9, 9) == doctest::Approx(g.max()));
  CHECK(g(10, 10) == doctest::Approx(g.max()));
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      CHECK(g(i, j) == doctest::Approx(g(19 - i, j)));
      CHECK(g(i, j) == doctest::Approx(g(i, 19 - j)));
    }
  }
  const GridMap wide = baselines::central_gaussian(20, 10.0);
  CHECK(wide.max() / wide.min() < 1.05);
  CHECK_THROWS(baselines::central_gaussian(20, 0.0));
}

TEST_CASE("average fixation map") {
  const GaussianKernel kernel;
  FixationTrace one{"s", "a", {{0, 0.42, 0.63, true}}};
  const auto afm = baselines::fit_afm({one}, 20, kernel);
  CHECK(afm.predict() == smooth_map(rasterize_fixation(0.42, 0.63, 20), kernel));
  CHECK_THROWS(baselines::fit_afm({}, 20, kernel));
  CHECK_THROWS(baselines::fit_afm({FixationTrace{"s", "a", {{0, 0.5, 0.5, false}}}}, 20, kernel));

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto random_trace = [&](int n, const std::string& subj) {
    FixationTrace t{"s", subj, {}};
    for (int i = 0; i < n; ++i) t.records.push_back({i, u(rng), u(rng), true});
    return t;
  };
  const auto a = random_trace(30, "a"), b = random_trace(70, "b");
  const auto both = baselines::fit_afm({a, b}, 20, kernel);
  const auto ma = baselines::fit_afm({a}, 20, kernel), mb = baselines::fit_afm({b}, 20, kernel);
  const auto swapped = baselines::fit_afm({b, a}, 20, kernel);
  CHECK(both.train_fixation_count == 100);
  for (std::size_t i = 0; i < both.map.size(); ++i) {
    CHECK(std::abs(both.map[i] - (0.3 * ma.map[i] + 0.7 * mb.map[i])) < 1e-12);
    CHECK(std::abs(both.map[i] - swapped.map[i]) < 1e-12);
  }

  // uniform fixations over all cells, cell centers so smoothing loses little
  FixationTrace grid{"s", "g", {}};
  int f = 0;
  for (int rep = 0; rep < 25; ++rep) {
    for (int r = 2; r < 18; ++r) {
      for (int c = 2; c < 18; ++c) grid.records.push_back({f++, (c + 0.5) / 20, (r + 0.5) / 20, true});
    }
  }
  const auto flat = baselines::fit_afm({grid}, 20, kernel).map;
  double lo = 1e9, hi = 0.0;
  for (int r = 4; r < 16; ++r) {
    for (int c = 4; c < 16; ++c) {
      lo = std::min(lo, flat(r, c));
      hi = std::max(hi, flat(r, c));
    }
  }
  CHECK(hi / lo < 1.2);

  // center-biased traces: AFM beats the uniform map on held-out data
  std::normal_distribution<double> n(0.5, 0.1);
  auto biased = [&](int len) {
    FixationTrace t{"s", "x", {}};
    for (int i = 0; i < len; ++i) t.records.push_back({i, std::clamp(n(rng), 0.0, 1.0), std::clamp(n(rng), 0.0, 1.0), true});
    return t;
  };
  const auto model = baselines::fit_afm({biased(500)}, 20, kernel);
  CHECK(metrics::score_static(model.map, biased(300)).nss_mean > 0.5);
}

TEST_CASE("fixation oracle") {
  const GaussianKernel kernel;
  FixationTrace t{"s", "a", {{0, 0.51, 0.49, true}, {1, 0.01, 0.01, true}, {2, 0.3, 0.8, true}}};
  const auto maps = baselines::fom(t, 20, kernel);
  const auto rep = metrics::score_sequence(maps, t);
  for (const auto& f : rep.per_frame) CHECK(f.auc == 1.0);
  const double interior = rep.per_frame[0].nss;
  // truncation at the corner concentrates the blob on fewer cells, which
  // raises the z-score of its peak
  CHECK(rep.per_frame[1].nss > interior);
  CHECK(rep.per_frame[2].nss == doctest::Approx(interior).epsilon(1e-12));
  // frozen from the closed form: k = 20, width 5, sigma 1
  CHECK(oracle::interior_fom_nss(20, 5, 1.0) == doctest::Approx(11.282330).epsilon(1e-6));
  CHECK(interior == doctest::Approx(oracle::interior_fom_nss(20, 5, 1.0)).epsilon(1e-12));
}
