#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "egogaze/recurrent.hpp"
#include "egogaze/synthetic.hpp"

using namespace egogaze;
using namespace egogaze::recurrent;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

GruLayerParams scalar_layer() { return GruLayerParams::zeros(1, 1); }

}  // namespace

TEST_CASE("gru cell") {
  SUBCASE("zero parameters keep a zero state") {
    const auto p = GruLayerParams::zeros(3, 4);
    GruCellCache cache;
    const auto h = gru_cell_forward(Eigen::VectorXd::Ones(3), Eigen::VectorXd::Zero(4), p, &cache);
    CHECK(h.isZero());
    CHECK(cache.z.isApproxToConstant(0.5));
    CHECK(cache.r.isApproxToConstant(0.5));
  }
  SUBCASE("saturated update gate carries the old state") {
    auto p = scalar_layer();
    p.b_z(0) = 40.0;
    const auto h = gru_cell_forward(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1), p);
    CHECK(h(0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("hand computation") {
    auto p = scalar_layer();
    p.w_h(0, 0) = 1.0;
    p.u_h(0, 0) = 1.0;
    const auto h = gru_cell_forward(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Constant(1, 0.5), p);
    CHECK(h(0) == doctest::Approx(0.5 * 0.5 + 0.5 * std::tanh(1.25)).epsilon(1e-12));
    CHECK(h(0) == doctest::Approx(0.67414).epsilon(1e-4));
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS(gru_cell_forward(Eigen::VectorXd::Ones(2), Eigen::VectorXd::Zero(4), GruLayerParams::zeros(3, 4)));
  }
  SUBCASE("gates and state stay bounded") {
    const auto model = GruGazeModel::random(5, 3, 7, 6);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
      GruCellCache c;
      const Eigen::VectorXd h0 = Eigen::VectorXd::Random(6) * 3.0;
      const auto h = gru_cell_forward(gaussian(5, 1, 100 + static_cast<std::uint64_t>(i)).col(0), h0,
                                      model.params.layers[0], &c);
      CHECK(c.z.minCoeff() > 0.0);
      CHECK(c.z.maxCoeff() < 1.0);
      CHECK(c.r.minCoeff() > 0.0);
      CHECK(c.r.maxCoeff() < 1.0);
      CHECK(h.cwiseAbs().maxCoeff() <= std::max(h0.cwiseAbs().maxCoeff(), 1.0));
    }
  }
}

TEST_CASE("forward sequence") {
  const auto zero = GruGazeModel::zeros(4, 3);
  const auto out = forward_sequence(zero, gaussian(5, 4, 2));
  REQUIRE(out.maps.size() == 5);
  for (const auto& m : out.maps) {
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(m[i] == doctest::Approx(1.0 / 9.0));
  }
  const auto model = GruGazeModel::random(4, 4, 3, 5);
  Eigen::MatrixXd f = gaussian(9, 4, 4);
  const auto a = forward_sequence(model, f);
  for (const auto& m : a.maps) {
    CHECK(std::abs(m.sum() - 1.0) < 1e-12);
    CHECK(m.min() > 0.0);
  }
  // permuting frames after t0 leaves earlier outputs untouched
  f.row(6).swap(f.row(8));
  const auto b = forward_sequence(model, f);
  for (int t = 0; t <= 5; ++t) CHECK(a.logits.row(t) == b.logits.row(t));
  CHECK_THROWS(forward_sequence(model, gaussian(3, 5, 1)));
}

TEST_CASE("loss") {
  CHECK(loss(Eigen::VectorXd::Zero(400), 17) == doctest::Approx(std::log(400.0)).epsilon(1e-12));
  Eigen::VectorXd l = Eigen::VectorXd::Zero(9);
  l(4) = 800.0;
  CHECK(loss(l, 4) < 1e-300 + 1e-12);
  CHECK(std::isfinite(loss(l, 3)));
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) CHECK(loss(gaussian(9, 1, 50 + static_cast<std::uint64_t>(i)).col(0) * 10.0, i % 9) >= 0.0);
  Eigen::VectorXd s = softmax(gaussian(9, 1, 6).col(0));
  CHECK(s.sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("gradient check") {
  const auto model = GruGazeModel::random(3, 3, 11, 4);
  const Eigen::MatrixXd f = gaussian(3, 3, 12);
  const std::vector<int> targets{2, -1, 7};
  const auto ok = gradient_check(model, f, targets);
  CHECK(ok.finite);
  CHECK(ok.max_relative_error < 1e-4);

  const auto bad = gradient_check(model, f, targets, [](GruParameters& g) { g.layers[1].u_h *= 2.0; });
  CHECK(bad.max_relative_error > 1e-2);
  CHECK(bad.worst_tensor.find("u_h") != std::string::npos);

  const auto z = gradient_check(GruGazeModel::zeros(3, 3, 4), f, targets);
  CHECK(z.finite);
  CHECK(z.max_relative_error < 1e-4);
}

TEST_CASE("training") {
  const auto task = synthetic::learnable_task(300, 5, 1, 2, 4, 6, 3.0);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.epochs = 6;
  cfg.seed = 9;
  const auto model = GruGazeModel::random(4, 5, 3, 8);
  const auto a = train(model, task.features, task.trace, cfg);
  const auto b = train(model, task.features, task.trace, cfg);
  REQUIRE(a.epoch_loss.size() == 6);
  CHECK(a.epoch_loss == b.epoch_loss);
  CHECK(a.epoch_loss.back() < a.epoch_loss.front());
  CHECK(a.epoch_loss.front() == doctest::Approx(std::log(25.0)).epsilon(0.2));
  CHECK(a.model.epochs_trained == 6);

  cfg.learning_rate = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg.learning_rate = 1e-3;
  cfg.bptt_window = 0;
  CHECK_THROWS(cfg.validate());

  FeatureMatrix bad = task.features;
  bad.data(3, 0) = std::numeric_limits<double>::infinity();
  cfg.bptt_window = 6;
  CHECK_THROWS(train(model, bad, task.trace, cfg));

  // resuming in memory continues bit-identically; a checkpoint stores f32
  const auto dir = std::filesystem::temp_directory_path() / "egogaze_tests" / "gru";
  std::filesystem::create_directories(dir);
  cfg.epochs = 3;
  cfg.learning_rate = 1e-2;
  const auto first = train(model, task.features, task.trace, cfg);
  auto six = cfg;
  six.epochs = 6;
  const auto straight = train(model, task.features, task.trace, six);
  const auto resumed = train(first.model, task.features, task.trace, cfg);
  CHECK(resumed.model.epochs_trained == 6);
  CHECK(resumed.epoch_loss.back() == straight.epoch_loss.back());
  CHECK(forward_sequence(resumed.model, task.features.data).logits ==
        forward_sequence(straight.model, task.features.data).logits);

  save_checkpoint(dir / "ck.f32", first.model, cfg);
  const auto ck = load_checkpoint(dir / "ck.f32");
  CHECK(ck.config.epochs == 3);
  CHECK(ck.config.learning_rate == cfg.learning_rate);
  CHECK(ck.model.epochs_trained == 3);
  CHECK(ck.model.adam.step == first.model.adam.step);
  const auto from_disk = train(ck.model, task.features, task.trace, cfg);
  CHECK(from_disk.epoch_loss.back() == doctest::Approx(straight.epoch_loss.back()).epsilon(1e-4));
}
