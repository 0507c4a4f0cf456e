#include "kere/study.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>

#include "kere/cross_validation.hpp"
#include "kere/parallel.hpp"

namespace kere::sim {
namespace {

using loss::ExpectileLevel;

std::vector<ExpectileLevel> to_levels(const std::vector<double>& omegas) {
  if (omegas.empty()) throw std::invalid_argument("study needs at least one level");
  std::vector<ExpectileLevel> levels;
  levels.reserve(omegas.size());
  for (double w : omegas) levels.emplace_back(w);
  return levels;
}

/** Tunes and refits every level on one training set. */
class LevelFits {
 public:
  LevelFits(const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y,
            const std::vector<ExpectileLevel>& levels, const StudyTuning& tuning,
            std::uint64_t cv_seed)
      : standardizer_(kernel::Standardizer::fit(x_raw)) {
    x_std_ = standardizer_.apply(x_raw);
    const double med = kernel::median_pairwise_sq_dist(x_std_);
    std::vector<double> sigma2s;
    sigma2s.reserve(tuning.sigma2_factors.size());
    for (double f : tuning.sigma2_factors) sigma2s.push_back(f * med);

    std::vector<kernel::GramBundle> bundles;
    bundles.reserve(sigma2s.size());
    for (double s2 : sigma2s)
      bundles.push_back(kernel::gram_matrix(kernel::KernelSpec::rbf(s2), x_std_));

    select::CVConfig config;
    config.folds = tuning.folds;
    config.sigma2_grid = sigma2s;
    config.path.num_lambdas = tuning.num_lambdas;
    config.path.fit = tuning.cv_fit;
    config.path.lambda_max = select::resolve_lambda_max(bundles, y, levels);
    config.seed = cv_seed;

    const auto cvs = select::cross_validate_multi(x_std_, y, levels, config);

    specs_.reserve(levels.size());
    coefs_.reserve(levels.size());
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const auto& cv = cvs[l];
      const auto s = static_cast<std::size_t>(cv.best_sigma2_index);
      solver::KuInverseFactory factory(bundles[s], levels[l]);
      auto fitted = solver::fit(factory, y, cv.best_lambda, nullptr, tuning.final_fit);
      specs_.push_back(bundles[s].spec);
      coefs_.push_back(std::move(fitted.coef));
    }
  }

  /// Predictions for raw query rows, one column per level.
  Eigen::MatrixXd predict(const Eigen::MatrixXd& query_raw) const {
    const Eigen::MatrixXd q = standardizer_.apply(query_raw);
    std::map<double, Eigen::MatrixXd> cross_by_sigma2;
    Eigen::MatrixXd out(q.rows(), static_cast<Eigen::Index>(specs_.size()));
    for (std::size_t l = 0; l < specs_.size(); ++l) {
      auto it = cross_by_sigma2.find(specs_[l].sigma2);
      if (it == cross_by_sigma2.end())
        it = cross_by_sigma2.emplace(specs_[l].sigma2, kernel::cross_gram(specs_[l], x_std_, q))
                 .first;
      out.col(static_cast<Eigen::Index>(l)) =
          (it->second.transpose() * coefs_[l].alpha).array() + coefs_[l].intercept;
    }
    return out;
  }

 private:
  kernel::Standardizer standardizer_;
  Eigen::MatrixXd x_std_;
  std::vector<kernel::KernelSpec> specs_;
  std::vector<solver::Coefficients> coefs_;
};

// Seed labels for the per-replication streams.
constexpr std::uint64_t kTrainTag = 1000, kTestTag = 2000, kCvTag = 3000;

template <typename MakeRep>
StudyResult run_generic(const std::vector<double>& omegas, int replications,
                        std::uint64_t master_seed, const StudyTuning& tuning,
                        MakeRep make_rep) {
  if (replications < 1) throw std::invalid_argument("study needs replications >= 1");
  const auto levels = to_levels(omegas);
  const auto n_levels = static_cast<Eigen::Index>(levels.size());

  StudyResult out;
  out.omegas = omegas;
  out.mad_values.resize(replications, n_levels);
  out.pred_errors.resize(replications, n_levels);
  out.rep_seconds.resize(replications);
  out.rep_seeds.resize(static_cast<std::size_t>(replications));
  out.cv_seeds.resize(static_cast<std::size_t>(replications));

  parallel_for(static_cast<std::size_t>(replications), [&](std::size_t rep) {
    const std::uint64_t train_seed = UniformStream::derive_seed(master_seed, kTrainTag + rep);
    const std::uint64_t test_seed = UniformStream::derive_seed(master_seed, kTestTag + rep);
    const std::uint64_t cv_seed = UniformStream::derive_seed(master_seed, kCvTag + rep);
    out.rep_seeds[rep] = train_seed;
    out.cv_seeds[rep] = cv_seed;

    SimData train, test;
    Eigen::MatrixXd truth;  // n_test x levels
    make_rep(train_seed, test_seed, levels, train, test, truth);

    const auto t0 = std::chrono::steady_clock::now();
    LevelFits fits(train.X, train.y, levels, tuning, cv_seed);
    const auto t1 = std::chrono::steady_clock::now();
    out.rep_seconds[static_cast<Eigen::Index>(rep)] =
        std::chrono::duration<double>(t1 - t0).count();

    const Eigen::MatrixXd pred = fits.predict(test.X);
    for (Eigen::Index l = 0; l < n_levels; ++l) {
      out.mad_values(static_cast<Eigen::Index>(rep), l) = mad(pred.col(l), truth.col(l));
      out.pred_errors(static_cast<Eigen::Index>(rep), l) =
          prediction_error(test.y, pred.col(l), levels[static_cast<std::size_t>(l)]);
    }
  });
  return out;
}

}  // namespace

Eigen::VectorXd StudyResult::mad_mean() const { return mad_values.colwise().mean(); }

Eigen::VectorXd StudyResult::mad_se() const {
  const Eigen::Index reps = mad_values.rows();
  Eigen::VectorXd out(mad_values.cols());
  for (Eigen::Index j = 0; j < mad_values.cols(); ++j) {
    const double mean = mad_values.col(j).mean();
    const double var = (mad_values.col(j).array() - mean).square().sum() /
                       static_cast<double>(std::max<Eigen::Index>(1, reps - 1));
    out[j] = std::sqrt(var / static_cast<double>(reps));
  }
  return out;
}

Eigen::VectorXd StudyResult::pred_error_mean() const { return pred_errors.colwise().mean(); }

StudyResult run_study(const Sim1Study& study) {
  return run_generic(
      study.omegas, study.replications, study.seed, study.tuning,
      [&study](std::uint64_t train_seed, std::uint64_t test_seed,
               const std::vector<ExpectileLevel>& levels, SimData& train, SimData& test,
               Eigen::MatrixXd& truth) {
        train = sim1_generate({study.n_train, study.error, train_seed});
        test = sim1_generate({study.n_test, study.error, test_seed});
        truth.resize(test.X.rows(), static_cast<Eigen::Index>(levels.size()));
        for (std::size_t l = 0; l < levels.size(); ++l)
          truth.col(static_cast<Eigen::Index>(l)) =
              sim1_true_expectile(study.error, test.X.col(0), levels[l]);
      });
}

StudyResult run_study(const Sim2Study& study) {
  // one function draw per replication, shared between train and test
  return run_generic(
      study.omegas, study.replications, study.seed, study.tuning,
      [&study](std::uint64_t train_seed, std::uint64_t test_seed,
               const std::vector<ExpectileLevel>& levels, SimData& train, SimData& test,
               Eigen::MatrixXd& truth) {
        const auto spec = Sim2Spec::make(study.n_train, study.p, study.heteroscedastic,
                                         study.error, train_seed);
        const auto test_spec = spec.resized(study.n_test, test_seed);
        train = sim2_generate(spec);
        test = sim2_generate(test_spec);
        truth.resize(test.X.rows(), static_cast<Eigen::Index>(levels.size()));
        for (std::size_t l = 0; l < levels.size(); ++l)
          truth.col(static_cast<Eigen::Index>(l)) =
              sim2_true_expectile(test_spec, test.X, levels[l]);
      });
}

Sim1Curves sim1_curves(const Sim1Study& study, Eigen::Index grid_size) {
  if (grid_size < 2) throw std::invalid_argument("sim1_curves needs a grid of at least 2");
  const auto levels = to_levels(study.omegas);
  const auto train =
      sim1_generate({study.n_train, study.error, UniformStream::derive_seed(study.seed, kTrainTag)});
  LevelFits fits(train.X, train.y, levels, study.tuning,
                 UniformStream::derive_seed(study.seed, kCvTag));

  Sim1Curves out;
  out.omegas = study.omegas;
  out.x.setLinSpaced(grid_size, -8.0, 8.0);
  Eigen::MatrixXd query(grid_size, 1);
  query.col(0) = out.x;
  out.predicted = fits.predict(query);
  out.truth.resize(grid_size, static_cast<Eigen::Index>(levels.size()));
  for (std::size_t l = 0; l < levels.size(); ++l)
    out.truth.col(static_cast<Eigen::Index>(l)) =
        sim1_true_expectile(study.error, out.x, levels[l]);
  return out;
}

}  // namespace kere::sim
