#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "kere/kernel.hpp"
#include "kere/path.hpp"

namespace kere::select {

/** Deterministic fold labels in [0, folds): a seeded shuffle of 0..n-1 dealt
 *  round-robin, so fold sizes differ by at most one.  Requires
 *  2 <= folds <= n. */
std::vector<int> kfold_split(Eigen::Index n, int folds, std::uint64_t seed);

/// Bandwidth grid {1/4, 1/2, 1, 2, 4} times the median pairwise squared
/// distance of the rows of X.
std::vector<double> default_sigma2_grid(const Eigen::MatrixXd& X);

struct CVConfig {
  int folds = 5;
  /// rbf bandwidth candidates; empty selects default_sigma2_grid(X).
  std::vector<double> sigma2_grid;
  /// Penalty grid and per-fit options for the fold fits.
  path::PathConfig path;
  std::uint64_t seed = 0;
};

struct CVResult {
  std::vector<double> sigma2_grid;
  Eigen::VectorXd lambdas;    ///< descending, shared by all bandwidths
  Eigen::MatrixXd mean_loss;  ///< bandwidth x lambda, mean of the fold means
  Eigen::MatrixXd se_loss;    ///< standard error of the fold means
  int best_sigma2_index = 0;
  int best_lambda_index = 0;
  double best_sigma2 = 0.0;
  double best_lambda = 0.0;
  std::vector<int> fold_assignment;
};

/** Path fit on the training part of one fold plus the held-out mean loss at
 *  each penalty.  Only training rows of (X, y) enter the fit; the held-out
 *  responses are touched exclusively by the loss evaluation. */
struct FoldFit {
  path::PathResult path;
  Eigen::VectorXd held_out_loss;
};
FoldFit fit_fold(const kernel::KernelSpec& spec, const Eigen::MatrixXd& X,
                 const Eigen::VectorXd& y, const std::vector<int>& assignment, int fold,
                 loss::ExpectileLevel level, const path::PathConfig& path_config);

/** Largest default_lambda_max over decomposed full-data bundles and levels;
 *  lets callers share one penalty grid across a bandwidth grid and several
 *  levels (bundles are decomposed in place and can be reused afterwards). */
double resolve_lambda_max(std::vector<kernel::GramBundle>& bundles, const Eigen::VectorXd& y,
                          const std::vector<loss::ExpectileLevel>& levels);

/** Grid search over (bandwidth, penalty) by k-fold cross validation of rbf
 *  fits.  The score of a cell is the mean over folds of the held-out mean
 *  loss.  Ties prefer the larger penalty, then the smaller bandwidth. */
CVResult cross_validate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        loss::ExpectileLevel level, const CVConfig& config);

/** Same search for several levels at once, sharing fold splits, Gram
 *  matrices and factorizations; entry i corresponds to levels[i]. */
std::vector<CVResult> cross_validate_multi(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                           const std::vector<loss::ExpectileLevel>& levels,
                                           const CVConfig& config);

}  // namespace kere::select
