#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace egogaze::svm {

struct SvmConfig {
  double lambda = 1e-4;
  int epochs = 20;
  double eta0 = 0.1;
  std::uint64_t seed = 0;
};

/// One-vs-rest linear SVM on standardized inputs.
struct LinearSvmModel {
  std::vector<int> classes;  // sorted label values
  Eigen::MatrixXd weights;   // classes x dim, in standardized units
  Eigen::VectorXd bias;
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;
  double lambda = 0.0;

  Eigen::VectorXd scores(const Eigen::RowVectorXd& x) const;
  int classify(const Eigen::RowVectorXd& x) const;
  std::vector<int> classify(const Eigen::MatrixXd& x) const;
};

/// Hinge loss with L2 penalty on the weights, trained by seeded stochastic
/// subgradient steps. The weight step is eta0 / (1 + eta0 * lambda * t); the
/// unpenalized bias uses eta0 / (1 + epoch) so it still moves when lambda is
/// large.
LinearSvmModel train_svm(const Eigen::MatrixXd& x, const std::vector<int>& labels, const SvmConfig& config = {});

double accuracy(const LinearSvmModel& model, const Eigen::MatrixXd& x, const std::vector<int>& labels);

}  // namespace egogaze::svm
