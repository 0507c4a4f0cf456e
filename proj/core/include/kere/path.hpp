#pragma once

#include <Eigen/Core>

#include <vector>

#include "kere/solver.hpp"

namespace kere::path {

struct PathConfig {
  /// Largest penalty; values <= 0 select the doubling probe default.
  double lambda_max = -1.0;
  /// Smallest penalty; values <= 0 select 1e-4 * lambda_max.
  double lambda_min = -1.0;
  int num_lambdas = 100;
  solver::FitOptions fit;
  /// Compute the contraction bound at every grid point (O(n^3) each).
  bool compute_rate_bound = false;
};

struct PathResult {
  Eigen::VectorXd lambdas;  ///< descending, endpoints exactly as configured
  std::vector<solver::Coefficients> coefficients;
  std::vector<solver::FitDiagnostics> diagnostics;
  bool all_converged = false;
};

/** Log-uniform grid of count values from hi down to lo with exact
 *  endpoints; count = 1 yields just hi.  Requires hi >= lo > 0. */
Eigen::VectorXd lambda_sequence(double hi, double lo, int count);

/** Smallest power-of-two multiple of ||y||^2 / n at which a cheap fit is
 *  essentially intercept-only (max |alpha_i| <= 1e-4). */
double default_lambda_max(const solver::KuInverseFactory& factory, const Eigen::VectorXd& y);

/** Fits the whole grid from large to small lambda, warm starting every fit
 *  at the previous solution.  Coefficients and diagnostics are indexed like
 *  lambdas. */
PathResult fit_path(const solver::KuInverseFactory& factory, const Eigen::VectorXd& y,
                    const PathConfig& config = {});

/// Convenience overload; decomposes the bundle when necessary.
PathResult fit_path(kernel::GramBundle& bundle, const Eigen::VectorXd& y,
                    loss::ExpectileLevel level, const PathConfig& config = {});

}  // namespace kere::path
