#include <doctest.h>

#include <cmath>
#include <random>

#include "egogaze/experiments.hpp"
#include "egogaze/metrics.hpp"
#include "egogaze/svm.hpp"
#include "egogaze/synthetic.hpp"

using namespace egogaze;
using namespace egogaze::experiments;

namespace {

TrainFn uniform_trainer(int k) {
  return [k](const FeatureMatrix&, const std::vector<FixationTrace>&) -> Predictor {
    return [k](const FeatureMatrix& f) { return std::vector<GridMap>(static_cast<std::size_t>(f.rows()), GridMap(k, 1.0)); };
  };
}

std::vector<Sequence> small_suite(std::uint64_t seed, int frames = 200, int subjects = 3) {
  auto tasks = synthetic::distinct_tasks();
  tasks.resize(3);
  return synthetic::task_suite(tasks, frames, subjects, 0.03, seed);
}

}  // namespace

TEST_CASE("transfer matrix") {
  const GaussianKernel kernel;
  const auto suite = small_suite(1);

  SUBCASE("clones of one sequence give constant rows") {
    std::vector<Sequence> clones(3, suite[0]);
    for (std::size_t i = 0; i < clones.size(); ++i) clones[i].id = "c" + std::to_string(i);
    const auto cm = transfer_matrix(clones, regression_trainer(20, kernel, 1e-3));
    for (int i = 0; i < 3; ++i) {
      for (int j = 1; j < 3; ++j) {
        CHECK(cm.auc(i, j) == cm.auc(i, 0));
        CHECK(cm.nss(i, j) == cm.nss(i, 0));
      }
    }
  }
  SUBCASE("uniform predictor scores chance") {
    const auto cm = transfer_matrix(suite, uniform_trainer(20));
    for (Eigen::Index i = 0; i < cm.auc.size(); ++i) {
      CHECK(cm.auc.data()[i] == 0.5);
      CHECK(cm.nss.data()[i] == 0.0);
    }
  }
  SUBCASE("trained on its own task transfers best") {
    const auto cm = transfer_matrix(suite, regression_trainer(20, kernel, 1e-3), mean_score, 2);
    CHECK(cm.train_ids.size() == 3);
    CHECK(cm.diagonal_mean_auc() > cm.off_diagonal_mean_auc());
    const auto serial = transfer_matrix(suite, regression_trainer(20, kernel, 1e-3));
    CHECK(serial.auc == cm.auc);
  }
  SUBCASE("a failed fit marks its row missing") {
    const auto base = regression_trainer(20, kernel, 1e-3);
    TrainFn flaky = [&](const FeatureMatrix& f, const std::vector<FixationTrace>& t) -> Predictor {
      if (t.front().sequence_id == suite[1].id) throw Error("no convergence");
      return base(f, t);
    };
    const auto cm = transfer_matrix(suite, flaky);
    REQUIRE(cm.errors.size() == 1);
    for (int j = 0; j < 3; ++j) {
      CHECK(cm.missing[1][static_cast<std::size_t>(j)]);
      CHECK(std::isnan(cm.auc(1, j)));
      CHECK_FALSE(cm.missing[0][static_cast<std::size_t>(j)]);
      CHECK(std::isfinite(cm.auc(2, j)));
    }
  }
  CHECK_THROWS(transfer_matrix({suite[0]}, uniform_trainer(20)));
}

TEST_CASE("combinations") {
  const auto c = combinations(4, 2);
  REQUIRE(c.size() == 6);
  CHECK(c.front() == std::vector<int>{0, 1});
  CHECK(c[1] == std::vector<int>{0, 2});
  CHECK(c.back() == std::vector<int>{2, 3});
  CHECK(std::is_sorted(c.begin(), c.end()));
  CHECK(combinations(5, 5).size() == 1);
  CHECK(combinations(6, 3).size() == 20);
}

TEST_CASE("subject ablation") {
  const GaussianKernel kernel;
  const auto seq = small_suite(2, 150, 4)[0];
  const auto curve = subject_ablation(seq, regression_trainer(20, kernel, 1e-3));
  REQUIRE(curve.size() == 3);
  CHECK(curve[0].budget == 1);
  CHECK(curve[0].runs == 4);
  CHECK(curve[1].runs == 6);
  CHECK(curve[2].runs == 4);

  Sequence pair = seq;
  pair.traces.resize(2);
  const auto two = subject_ablation(pair, regression_trainer(20, kernel, 1e-3));
  REQUIRE(two.size() == 1);
  CHECK(two[0].runs == 2);

  pair.traces.resize(1);
  CHECK_THROWS(subject_ablation(pair, regression_trainer(20, kernel)));
}

TEST_CASE("frame ablation") {
  const GaussianKernel kernel;
  const auto suite = small_suite(3, 700, 2);
  const auto train = regression_trainer(20, kernel, 1e-3);
  const auto a = frame_ablation(suite[0], suite[0], train, 200, 3, 11);
  const auto b = frame_ablation(suite[0], suite[0], train, 200, 3, 11, mean_score, 3);
  REQUIRE(a.size() == 4);
  CHECK(a[0].budget == 200);
  CHECK(a[2].budget == 600);
  CHECK(a.back().budget == 700);
  CHECK(a.back().nss_std == 0.0);
  CHECK(a.back().auc_std == 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].nss_mean == b[i].nss_mean);
    CHECK(a[i].auc_mean == b[i].auc_mean);
    CHECK(a[i].runs == 3);
  }
  const auto other_seed = frame_ablation(suite[0], suite[0], train, 200, 3, 12);
  CHECK(other_seed[0].nss_mean != a[0].nss_mean);
  CHECK(other_seed.back().nss_mean == a.back().nss_mean);
  CHECK_THROWS(frame_ablation(suite[0], suite[0], train, 800, 3, 1));
  CHECK_THROWS(frame_ablation(suite[0], suite[0], train, 100, 0, 1));
}

TEST_CASE("window features") {
  const GaussianKernel kernel;
  std::mt19937_64 rng(4);
  const auto task = synthetic::distinct_tasks()[0];
  const auto path = synthetic::gaze_path(task, 60, rng);
  const auto trace = synthetic::trace_from_path(path, "s", "a", 0.01, rng, 0.1);
  const auto maps = synthetic::noisy_oracle_maps(path, 1.0, 20, kernel, rng);

  const auto one = window_features(maps, trace, 1, 30, 5);
  for (int i = 0; i < 30; ++i) {
    const auto t = static_cast<std::size_t>(one.starts[static_cast<std::size_t>(i)]);
    CHECK(one.avg_map.row(i) == linearize(maps[t]));
    const auto& r = trace.records[t];
    const double expected = r.valid ? metrics::nss(maps[t], fixation_cell(r.x, r.y, 20)) : 0.0;
    CHECK(one.nss_vector(i, 0) == expected);
  }

  const auto w5 = window_features(maps, trace, 5, 40, 6, 3, 10, 30);
  CHECK(w5.label == 3);
  CHECK(w5.nss_vector.cols() == 5);
  for (int s : w5.starts) {
    CHECK(s >= 10);
    CHECK(s <= 25);
  }
  const auto again = window_features(maps, trace, 5, 40, 6, 3, 10, 30);
  CHECK(again.starts == w5.starts);
  CHECK(again.avg_map == w5.avg_map);
  const auto aug = w5.features(WindowKind::augmented);
  CHECK(aug.cols() == 400 + 5);
  CHECK(w5.features(WindowKind::nss_vector) == w5.nss_vector);

  CHECK_THROWS(window_features(maps, trace, 30, 5, 1, 0, 10, 30));
  CHECK_THROWS(window_features({maps[0]}, trace, 1, 5, 1));
}

TEST_CASE("linear svm") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  const int per = 60;
  Eigen::MatrixXd x(3 * per, 4);
  std::vector<int> labels;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < per; ++i) {
      for (int d = 0; d < 4; ++d) x(c * per + i, d) = 0.3 * n(rng) + (d == c ? 4.0 : 0.0);
      labels.push_back(c * 10);
    }
  }
  const auto model = svm::train_svm(x, labels);
  CHECK(model.classes == std::vector<int>{0, 10, 20});
  CHECK(svm::accuracy(model, x, labels) == 1.0);
  CHECK(svm::train_svm(x, labels).weights == model.weights);

  // shuffled labels on held-out data stay near chance
  double mean = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    std::vector<int> shuffled = labels;
    std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(100 + s));
    svm::SvmConfig cfg;
    cfg.seed = s;
    const auto m = svm::train_svm(x.topRows(120), {shuffled.begin(), shuffled.begin() + 120}, cfg);
    mean += svm::accuracy(m, x.bottomRows(60), {shuffled.begin() + 120, shuffled.end()}) / 20.0;
  }
  CHECK(mean > 0.2);
  CHECK(mean < 0.47);

  // overwhelming regularization collapses to the majority class
  std::vector<int> skewed(labels.size(), 1);
  for (std::size_t i = 0; i < 40; ++i) skewed[i] = 0;
  svm::SvmConfig heavy;
  heavy.lambda = 1e6;
  const auto flat = svm::train_svm(x, skewed, heavy);
  for (int p : flat.classify(x)) CHECK(p == 1);

  CHECK_THROWS(svm::train_svm(x, std::vector<int>(labels.size(), 2)));
  CHECK_THROWS(svm::train_svm(x, {1, 2}));
}

TEST_CASE("activity curves") {
  auto tasks = synthetic::distinct_tasks();
  const auto suite = synthetic::activity_suite(tasks, 600, 20, 8);
  ActivityConfig cfg;
  cfg.window_sizes = {2, 10};
  cfg.windows = 200;
  cfg.seed = 9;
  const auto a = activity_curves(suite, cfg);
  CHECK(a.classes == 5);
  CHECK(a.chance == doctest::Approx(0.2));
  for (const auto& acc : a.accuracy) {
    REQUIRE(acc.size() == 2);
    for (double v : acc) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  CHECK(activity_curves(suite, cfg, 2).accuracy == a.accuracy);
  CHECK_THROWS(activity_curves({suite[0]}, cfg));
  cfg.train_fraction = 1.0;
  CHECK_THROWS(activity_curves(suite, cfg));
}

TEST_CASE("spearman") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 3}, {1, 8, 27}) == doctest::Approx(1.0));
  // ties take the average rank
  CHECK(spearman({1, 1, 2}, {1, 2, 3}) == doctest::Approx(0.8660254037844386));
  CHECK_THROWS(spearman({1}, {1}));
  CHECK_THROWS(spearman({1, 2}, {1, 2, 3}));
}
