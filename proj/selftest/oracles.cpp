#include "oracles.hpp"

#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>

namespace egogaze::oracle {

GridMap gaussian_smooth(const GridMap& map, int width, double sigma) {
  const int r = width / 2;
  const int k = map.k();
  double z = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) z += std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
  }
  GridMap out(k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      double acc = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int y = i + dy;
          const int x = j + dx;
          if (y < 0 || y >= k || x < 0 || x >= k) continue;
          acc += map(y, x) * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)) / z;
        }
      }
      out(i, j) = acc;
    }
  }
  return out;
}

double auc_pairwise(const GridMap& map, Cell fixation) {
  const double pos = map(fixation.row, fixation.col);
  double wins = 0.0;
  int others = 0;
  for (int i = 0; i < map.k(); ++i) {
    for (int j = 0; j < map.k(); ++j) {
      if (i == fixation.row && j == fixation.col) continue;
      ++others;
      if (pos > map(i, j)) {
        wins += 1.0;
      } else if (pos == map(i, j)) {
        wins += 0.5;
      }
    }
  }
  return wins / others;
}

double nss_direct(const GridMap& map, Cell fixation) {
  long double mean = 0.0L;
  for (std::size_t i = 0; i < map.size(); ++i) mean += map[i];
  mean /= static_cast<long double>(map.size());
  long double var = 0.0L;
  for (std::size_t i = 0; i < map.size(); ++i) var += (map[i] - mean) * (map[i] - mean);
  var /= static_cast<long double>(map.size());
  if (var == 0.0L) return 0.0;
  return static_cast<double>((map(fixation.row, fixation.col) - mean) / std::sqrt(var));
}

double pearson_direct(const GridMap& a, const GridMap& b) {
  long double ma = 0.0L, mb = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<long double>(a.size());
  mb /= static_cast<long double>(b.size());
  long double sab = 0.0L, saa = 0.0L, sbb = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0L || sbb == 0.0L) return 0.0;
  return static_cast<double>(sab / std::sqrt(saa * sbb));
}

Eigen::MatrixXd normal_equations(const Eigen::MatrixXd& m, const Eigen::MatrixXd& x, double ridge) {
  Eigen::MatrixXd g = m.transpose() * m;
  g.diagonal().array() += ridge;
  return g.ldlt().solve(m.transpose() * x);
}

Eigen::MatrixXd pinv_eigen(const Eigen::MatrixXd& m, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.transpose() * m);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > rel_tol * top) inv(i) = 1.0 / ev(i);
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * m.transpose();
}

Eigen::VectorXd stationary_dense(const Eigen::MatrixXd& p) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(p.transpose());
  Eigen::Index best = 0;
  double gap = std::abs(es.eigenvalues()(0) - std::complex<double>(1.0, 0.0));
  for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i) {
    const double g = std::abs(es.eigenvalues()(i) - std::complex<double>(1.0, 0.0));
    if (g < gap) {
      gap = g;
      best = i;
    }
  }
  Eigen::VectorXd v = es.eigenvectors().col(best).real();
  return v / v.sum();
}

double interior_fom_nss(int k, int width, double sigma) {
  const int r = width / 2;
  double z = 0.0;
  double peak = 0.0;
  double sum_sq = 0.0;
  for (int d = -r; d <= r; ++d) z += std::exp(-d * d / (2.0 * sigma * sigma));
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)) / (z * z);
      if (dx == 0 && dy == 0) peak = w;
      sum_sq += w * w;
    }
  }
  // the smoothed map sums to one, so its mean is 1 / k^2
  const double n = static_cast<double>(k) * k;
  const double mean = 1.0 / n;
  return (peak - mean) / std::sqrt(sum_sq / n - mean * mean);
}

}  // namespace egogaze::oracle
