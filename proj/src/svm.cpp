#include "egogaze/svm.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "egogaze/errors.hpp"

namespace egogaze::svm {

Eigen::VectorXd LinearSvmModel::scores(const Eigen::RowVectorXd& x) const {
  if (x.size() != mean.size()) throw DimensionError("svm input has wrong dimension");
  const Eigen::RowVectorXd z = (x - mean).cwiseQuotient(scale);
  return weights * z.transpose() + bias;
}

int LinearSvmModel::classify(const Eigen::RowVectorXd& x) const {
  Eigen::Index best = 0;
  scores(x).maxCoeff(&best);
  return classes[static_cast<std::size_t>(best)];
}

std::vector<int> LinearSvmModel::classify(const Eigen::MatrixXd& x) const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) out.push_back(classify(Eigen::RowVectorXd(x.row(r))));
  return out;
}

LinearSvmModel train_svm(const Eigen::MatrixXd& x, const std::vector<int>& labels, const SvmConfig& config) {
  if (x.rows() != static_cast<Eigen::Index>(labels.size())) throw DimensionError("one label per row required");
  if (x.rows() == 0 || x.cols() == 0) throw DimensionError("svm needs a non-empty training set");
  if (!x.allFinite()) throw Error("svm inputs must be finite");
  if (!(config.lambda > 0.0) || config.epochs < 1 || !(config.eta0 > 0.0)) throw Error("invalid svm config");
  const std::set<int> unique(labels.begin(), labels.end());
  if (unique.size() < 2) throw Error("svm needs at least two classes");

  LinearSvmModel model;
  model.classes.assign(unique.begin(), unique.end());
  model.lambda = config.lambda;
  model.mean = x.colwise().mean();
  model.scale = ((x.rowwise() - model.mean).array().square().colwise().mean()).sqrt().matrix();
  for (Eigen::Index j = 0; j < model.scale.size(); ++j) {
    if (model.scale(j) < 1e-12) model.scale(j) = 1.0;
  }
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMatrix z = (x.rowwise() - model.mean).array().rowwise() / model.scale.array();

  const auto n_classes = static_cast<Eigen::Index>(model.classes.size());
  model.weights = Eigen::MatrixXd::Zero(n_classes, x.cols());
  model.bias = Eigen::VectorXd::Zero(n_classes);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);
  // weights = a * v, so the per-step L2 shrink is a scalar update
  RowMatrix v = RowMatrix::Zero(n_classes, x.cols());
  double a = 1.0;
  long t = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double eta_b = config.eta0 / (1.0 + epoch);
    for (const Eigen::Index i : order) {
      const double eta = config.eta0 / (1.0 + config.eta0 * config.lambda * static_cast<double>(t));
      ++t;
      const Eigen::VectorXd s = a * (v * z.row(i).transpose()) + model.bias;
      const double shrink = 1.0 - eta * config.lambda;
      if (shrink <= 0.0) {
        v.setZero();
        a = 1.0;
      } else {
        a *= shrink;
      }
      for (Eigen::Index c = 0; c < n_classes; ++c) {
        const double y = labels[static_cast<std::size_t>(i)] == model.classes[static_cast<std::size_t>(c)] ? 1.0 : -1.0;
        if (y * s(c) < 1.0) {
          v.row(c).noalias() += (eta * y / a) * z.row(i);
          model.bias(c) += eta_b * y;
        }
      }
      if (a < 1e-9) {
        v *= a;
        a = 1.0;
      }
    }
  }
  model.weights = a * v;
  if (!model.weights.allFinite()) throw Error("svm training diverged");
  return model;
}

double accuracy(const LinearSvmModel& model, const Eigen::MatrixXd& x, const std::vector<int>& labels) {
  if (x.rows() != static_cast<Eigen::Index>(labels.size())) throw DimensionError("one label per row required");
  if (labels.empty()) return 0.0;
  const auto pred = model.classify(x);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += pred[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

}  // namespace egogaze::svm
