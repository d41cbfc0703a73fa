#pragma once

// Slow, direct reference computations. They share no code with the library
// paths they check.

#include <vector>

#include <Eigen/Dense>

#include "egogaze/core.hpp"

namespace egogaze::oracle {

/// 2-D zero-padded convolution with explicitly evaluated Gaussian weights.
GridMap gaussian_smooth(const GridMap& map, int width, double sigma);

/// Fraction of other cells ranked strictly below the fixated cell, ties
/// counted half, by exhaustive pairwise comparison.
double auc_pairwise(const GridMap& map, Cell fixation);

/// Two-pass z-score in long double.
double nss_direct(const GridMap& map, Cell fixation);

double pearson_direct(const GridMap& a, const GridMap& b);

/// (M^T M + ridge I)^-1 M^T X through a Cholesky-type solve.
Eigen::MatrixXd normal_equations(const Eigen::MatrixXd& m, const Eigen::MatrixXd& x, double ridge);

/// Pseudo-inverse from the eigendecomposition of M^T M, dropping eigenvalues
/// at or below rel_tol * largest.
Eigen::MatrixXd pinv_eigen(const Eigen::MatrixXd& m, double rel_tol = 1e-12);

/// Left Perron vector of a row-stochastic matrix from a dense eigensolve of
/// P^T, normalized to sum 1.
Eigen::VectorXd stationary_dense(const Eigen::MatrixXd& p);

/// NSS of the smoothed one-hot map at its own peak when the fixation is at
/// least width / 2 cells from every border (no kernel truncation).
double interior_fom_nss(int k, int width, double sigma);

}  // namespace egogaze::oracle
