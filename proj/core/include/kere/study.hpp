#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "kere/simulate.hpp"
#include "kere/solver.hpp"

namespace kere::sim {

/** Tuning protocol shared by the benchmark studies: features are
 *  standardized, the bandwidth grid is the median heuristic times the given
 *  factors, one log-uniform penalty grid per replication is shared across
 *  all levels, and the winning pair is refitted on the full training set. */
struct StudyTuning {
  int folds = 5;
  int num_lambdas = 50;
  std::vector<double> sigma2_factors = {0.25, 0.5, 1.0, 2.0, 4.0};
  solver::FitOptions cv_fit;
  solver::FitOptions final_fit;

  StudyTuning() {
    cv_fit.tol_scale = 1e-6;  // fold fits can be looser than the refit
    cv_fit.max_iter = 60;
    cv_fit.record_contractions = false;
    final_fit.max_iter = 200;
    final_fit.record_contractions = false;
  }
};

struct Sim1Study {
  Sim1Error error = Sim1Error::mixed_normal;
  std::vector<double> omegas = {0.05, 0.2, 0.5, 0.8, 0.95};
  Eigen::Index n_train = 400;
  Eigen::Index n_test = 2000;
  int replications = 20;
  std::uint64_t seed = 1;
  StudyTuning tuning;
};

struct Sim2Study {
  Sim2Error error = Sim2Error::normal;
  bool heteroscedastic = false;
  std::vector<double> omegas = {0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95};
  Eigen::Index n_train = 300;
  Eigen::Index n_test = 1200;
  int p = 10;
  int replications = 10;
  std::uint64_t seed = 1;
  StudyTuning tuning;
};

struct StudyResult {
  std::vector<double> omegas;
  Eigen::MatrixXd mad_values;   ///< replication x level
  Eigen::MatrixXd pred_errors;  ///< replication x level, held-out loss
  Eigen::VectorXd rep_seconds;  ///< tuning + refit wall time per replication
  std::vector<std::uint64_t> rep_seeds;
  std::vector<std::uint64_t> cv_seeds;

  Eigen::VectorXd mad_mean() const;
  Eigen::VectorXd mad_se() const;
  Eigen::VectorXd pred_error_mean() const;
};

/** Runs the full pipeline (generate, tune, refit, evaluate) over
 *  replications with seeds derived from study.seed; matched seeds across
 *  variants that differ only in the noise model reuse the same covariate
 *  and function draws. */
StudyResult run_study(const Sim1Study& study);
StudyResult run_study(const Sim2Study& study);

/** Fitted against true curves of one replication on an x grid, for
 *  plotting. */
struct Sim1Curves {
  Eigen::VectorXd x;
  std::vector<double> omegas;
  Eigen::MatrixXd predicted;  ///< grid x level
  Eigen::MatrixXd truth;
};
Sim1Curves sim1_curves(const Sim1Study& study, Eigen::Index grid_size = 201);

}  // namespace kere::sim
