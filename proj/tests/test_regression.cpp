#include <doctest.h>

#include <filesystem>
#include <random>

#include "egogaze/baselines.hpp"
#include "egogaze/regression.hpp"
#include "oracles.hpp"

using namespace egogaze;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

double residual(const Eigen::MatrixXd& m, const Eigen::MatrixXd& w, const Eigen::MatrixXd& x) { return (m * w - x).norm(); }

}  // namespace

TEST_CASE("fit: identity and exact constructions") {
  const Eigen::MatrixXd x = gaussian(9, 4, 1);
  CHECK((regression::fit(Eigen::MatrixXd::Identity(9, 9), x, 2).weights - x).cwiseAbs().maxCoeff() < 1e-12);

  const Eigen::MatrixXd m = gaussian(50, 10, 2);
  const Eigen::MatrixXd target = m * gaussian(10, 4, 3);
  const auto model = regression::fit(m, target, 2);
  CHECK((m * model.weights - target).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(model.rank == 10);
}

TEST_CASE("fit: regularized normal equations oracle") {
  const Eigen::MatrixXd m = gaussian(200, 50, 4), x = gaussian(200, 16, 5);
  for (double ridge : {0.0, 0.1, 3.0}) {
    const Eigen::MatrixXd w = regression::fit(m, x, 4, ridge).weights;
    const Eigen::MatrixXd ref = oracle::normal_equations(m, x, ridge);
    CHECK((w - ref).norm() / ref.norm() < 1e-8);
  }
}

TEST_CASE("fit: duplicated column gives the minimum-norm solution") {
  Eigen::MatrixXd m = gaussian(40, 6, 6);
  m.col(5) = m.col(2);
  const Eigen::MatrixXd x = gaussian(40, 4, 7);
  const auto model = regression::fit(m, x, 2);
  const Eigen::MatrixXd ref = oracle::pinv_eigen(m, 1e-10) * x;
  CHECK(model.rank == 5);
  CHECK(std::abs(residual(m, model.weights, x) - residual(m, ref, x)) < 1e-8);
  CHECK(model.weights.norm() <= ref.norm() + 1e-8);
  // the duplicated pair shares its weight equally
  CHECK((model.weights.row(2) - model.weights.row(5)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fit: degenerate and invalid input") {
  const auto zero = regression::fit(Eigen::MatrixXd::Zero(5, 3), gaussian(5, 4, 8), 2);
  CHECK(zero.rank == 0);
  CHECK(zero.weights.isZero());
  CHECK_THROWS(regression::fit(Eigen::MatrixXd(0, 3), Eigen::MatrixXd(0, 4), 2));
  CHECK_THROWS(regression::fit(gaussian(5, 3, 1), gaussian(4, 4, 1), 2));
  CHECK_THROWS(regression::fit(gaussian(5, 3, 1), gaussian(5, 5, 1), 2));
  CHECK_THROWS(regression::fit(gaussian(5, 3, 1), gaussian(5, 4, 1), 2, -1.0));
}

TEST_CASE("fit properties") {
  const Eigen::MatrixXd m = gaussian(60, 12, 9), x = gaussian(60, 9, 10);
  const auto base = regression::fit(m, x, 3);
  const auto scaled = regression::fit(3.5 * m, x, 3);
  CHECK((scaled.weights - base.weights / 3.5).cwiseAbs().maxCoeff() < 1e-8);

  const double r0 = residual(m, base.weights, x);
  for (std::uint64_t s = 0; s < 10; ++s) CHECK(r0 <= residual(m, base.weights + 0.1 * gaussian(12, 9, 100 + s), x));

  double prev = r0;
  for (double ridge : {0.01, 0.1, 1.0, 10.0, 100.0}) {
    const double r = residual(m, regression::fit(m, x, 3, ridge).weights, x);
    CHECK(r >= prev - 1e-12);
    prev = r;
  }
}

TEST_CASE("predict") {
  const Eigen::MatrixXd m = gaussian(30, 8, 11);
  const Eigen::MatrixXd x = m * gaussian(8, 4, 12);
  const auto model = regression::fit(m, x, 2);
  const auto signed_maps = regression::predict_signed(model, m);
  for (int i = 0; i < 30; ++i) {
    for (int c = 0; c < 4; ++c) CHECK(std::abs(signed_maps[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] - x(i, c)) < 1e-8);
  }
  FeatureMatrix f;
  f.data = m;
  const auto batch = regression::predict(model, f);
  for (int i = 0; i < 30; ++i) {
    const GridMap row = regression::predict(model, Eigen::RowVectorXd(m.row(i)));
    CHECK(row == batch[static_cast<std::size_t>(i)]);
    CHECK(row.is_nonnegative());
  }
  CHECK(regression::predict(model, Eigen::RowVectorXd::Zero(8)) == GridMap(2));
  CHECK_THROWS(regression::predict(model, Eigen::RowVectorXd::Zero(7)));
}

TEST_CASE("fit on a trace uses valid frames only") {
  const GaussianKernel kernel;
  FixationTrace t{"s", "a", {}};
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 40; ++i) t.records.push_back({i, u(rng), u(rng), i % 5 != 0});
  FeatureMatrix f;
  f.data = gaussian(40, 6, 14);
  const auto model = regression::fit(f, t, 20, kernel);
  std::vector<int> rows;
  for (int i = 0; i < 40; ++i) {
    if (i % 5 != 0) rows.push_back(i);
  }
  const auto targets = build_targets(select_records(t, rows), 20, kernel);
  const auto ref = regression::fit(f.select_rows(rows).data, targets.data, 20);
  CHECK((model.weights - ref.weights).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("combine_cues") {
  const GaussianKernel kernel;
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  FixationTrace t{"s", "a", {}};
  for (int i = 0; i < 120; ++i) t.records.push_back({i, u(rng), u(rng), true});
  const auto fom = baselines::fom(t, 20, kernel);

  SUBCASE("a stream equal to the targets") {
    const auto combo = regression::combine_cues({{"fom", fom}}, t, kernel);
    CHECK(combo.names == std::vector<std::string>{"fom"});
    CHECK(combo.model.residual_norm < 1e-3);
  }
  SUBCASE("noise stream does not raise the training residual") {
    std::vector<GridMap> noise;
    for (int i = 0; i < 120; ++i) {
      GridMap m(20);
      for (std::size_t c = 0; c < m.size(); ++c) m[c] = u(rng);
      noise.push_back(m);
    }
    std::vector<GridMap> weak;
    for (const auto& m : fom) weak.push_back(0.5 * m + noise[weak.size()] * 0.5);
    const auto one = regression::combine_cues({{"weak", weak}}, t, kernel, 0.0);
    const auto two = regression::combine_cues({{"weak", weak}, {"noise", noise}}, t, kernel, 0.0);
    CHECK(two.model.residual_norm <= one.model.residual_norm + 1e-9);
  }
  SUBCASE("misaligned streams are rejected by name") {
    std::vector<GridMap> short_stream(fom.begin(), fom.begin() + 10);
    try {
      regression::combine_cues({{"fom", fom}, {"short", short_stream}}, t, kernel);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("short") != std::string::npos);
    }
  }
  SUBCASE("prediction requires the same stream names") {
    const auto combo = regression::combine_cues({{"a", fom}, {"b", fom}}, t, kernel);
    CHECK_THROWS(regression::predict(combo, {{"b", fom}, {"a", fom}}));
    CHECK(regression::predict(combo, {{"a", fom}, {"b", fom}}).size() == fom.size());
  }
}

TEST_CASE("model file round-trip") {
  const auto dir = std::filesystem::temp_directory_path() / "egogaze_tests" / "model";
  std::filesystem::create_directories(dir);
  const Eigen::MatrixXd m = gaussian(20, 5, 16);
  const auto model = regression::fit(m, gaussian(20, 4, 17), 2, 0.25);
  regression::save_model(dir / "w.f32", model);
  const auto back = regression::load_model(dir / "w.f32");
  CHECK(back.k == 2);
  CHECK(back.ridge == 0.25);
  CHECK(back.rank == model.rank);
  CHECK((back.weights - model.weights).cwiseAbs().maxCoeff() < 1e-6 * model.weights.cwiseAbs().maxCoeff());
}
