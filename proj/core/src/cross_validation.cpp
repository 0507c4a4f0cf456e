#include "kere/cross_validation.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "kere/loss.hpp"
#include "kere/random.hpp"

namespace kere::select {
namespace {

using kernel::GramBundle;
using loss::ExpectileLevel;

struct FoldIndices {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> held;
};

FoldIndices fold_indices(const std::vector<int>& assignment, int fold) {
  FoldIndices idx;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    (assignment[i] == fold ? idx.held : idx.train).push_back(static_cast<Eigen::Index>(i));
  }
  return idx;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& y, const std::vector<Eigen::Index>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = y[idx[i]];
  return out;
}

Eigen::VectorXd held_out_losses(const path::PathResult& pr, const Eigen::MatrixXd& cross,
                                const Eigen::VectorXd& y_held, ExpectileLevel level) {
  const Eigen::Index m = pr.lambdas.size();
  Eigen::VectorXd out(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto& coef = pr.coefficients[static_cast<std::size_t>(j)];
    const Eigen::VectorXd pred =
        (cross.transpose() * coef.alpha).array() + coef.intercept;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y_held.size(); ++i)
      acc += loss::loss_value(y_held[i] - pred[i], level);
    out[j] = acc / static_cast<double>(y_held.size());
  }
  return out;
}

}  // namespace

std::vector<int> kfold_split(Eigen::Index n, int folds, std::uint64_t seed) {
  if (folds < 2 || static_cast<Eigen::Index>(folds) > n)
    throw std::invalid_argument("kfold_split requires 2 <= folds <= n");
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  UniformStream stream(seed);
  shuffle_indices(perm, stream);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < perm.size(); ++i)
    fold[static_cast<std::size_t>(perm[i])] = static_cast<int>(i % folds);
  return fold;
}

std::vector<double> default_sigma2_grid(const Eigen::MatrixXd& X) {
  const double med = kernel::median_pairwise_sq_dist(X);
  if (!(med > 0.0))
    throw std::invalid_argument("default_sigma2_grid: degenerate features (zero median distance)");
  return {0.25 * med, 0.5 * med, med, 2.0 * med, 4.0 * med};
}

FoldFit fit_fold(const kernel::KernelSpec& spec, const Eigen::MatrixXd& X,
                 const Eigen::VectorXd& y, const std::vector<int>& assignment, int fold,
                 ExpectileLevel level, const path::PathConfig& path_config) {
  if (assignment.size() != static_cast<std::size_t>(X.rows()) || X.rows() != y.size())
    throw std::invalid_argument("fit_fold: size mismatch");
  const auto idx = fold_indices(assignment, fold);
  if (idx.held.empty() || idx.train.empty())
    throw std::invalid_argument("fit_fold: fold has no held-out or no training rows");

  const Eigen::MatrixXd x_train = gather_rows(X, idx.train);
  const Eigen::VectorXd y_train = gather(y, idx.train);
  const Eigen::MatrixXd x_held = gather_rows(X, idx.held);
  const Eigen::VectorXd y_held = gather(y, idx.held);

  GramBundle bundle = kernel::gram_matrix(spec, x_train);
  kernel::eigendecompose(bundle);
  solver::KuInverseFactory factory(bundle, level);

  path::PathConfig conf = path_config;
  if (conf.lambda_max <= 0.0) conf.lambda_max = path::default_lambda_max(factory, y_train);

  FoldFit out;
  out.path = path::fit_path(factory, y_train, conf);
  const Eigen::MatrixXd cross = kernel::cross_gram(spec, x_train, x_held);
  out.held_out_loss = held_out_losses(out.path, cross, y_held, level);
  return out;
}

double resolve_lambda_max(std::vector<GramBundle>& bundles, const Eigen::VectorXd& y,
                          const std::vector<ExpectileLevel>& levels) {
  if (bundles.empty() || levels.empty())
    throw std::invalid_argument("resolve_lambda_max: nothing to probe");
  double hi = 0.0;
  for (auto& bundle : bundles) {
    kernel::eigendecompose(bundle);
    for (const auto level : levels) {
      solver::KuInverseFactory factory(bundle, level);
      hi = std::max(hi, path::default_lambda_max(factory, y));
    }
  }
  return hi;
}

CVResult cross_validate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        ExpectileLevel level, const CVConfig& config) {
  return cross_validate_multi(X, y, {level}, config).front();
}

std::vector<CVResult> cross_validate_multi(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                           const std::vector<ExpectileLevel>& levels,
                                           const CVConfig& config) {
  const Eigen::Index n = X.rows();
  if (y.size() != n) throw std::invalid_argument("cross_validate: response length mismatch");
  if (levels.empty()) throw std::invalid_argument("cross_validate: no levels given");

  const std::vector<double> sigma2s =
      config.sigma2_grid.empty() ? default_sigma2_grid(X) : config.sigma2_grid;
  for (double s2 : sigma2s)
    if (!(s2 > 0.0)) throw std::invalid_argument("cross_validate: bandwidths must be positive");

  const std::vector<int> assignment = kfold_split(n, config.folds, config.seed);

  path::PathConfig pconf = config.path;
  if (pconf.lambda_max <= 0.0) {
    std::vector<GramBundle> full;
    full.reserve(sigma2s.size());
    for (double s2 : sigma2s) full.push_back(kernel::gram_matrix(kernel::KernelSpec::rbf(s2), X));
    pconf.lambda_max = resolve_lambda_max(full, y, levels);
  }
  if (pconf.lambda_min <= 0.0) pconf.lambda_min = 1e-4 * pconf.lambda_max;
  const Eigen::VectorXd lambdas =
      path::lambda_sequence(pconf.lambda_max, pconf.lambda_min, pconf.num_lambdas);

  const auto n_sigma = static_cast<Eigen::Index>(sigma2s.size());
  const Eigen::Index n_lambda = lambdas.size();
  const auto n_level = levels.size();
  const int k = config.folds;

  // fold_means[l][s](f, j): held-out mean loss of fold f at lambda j
  std::vector<std::vector<Eigen::MatrixXd>> fold_means(
      n_level, std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(n_sigma),
                                            Eigen::MatrixXd::Zero(k, n_lambda)));

  for (Eigen::Index s = 0; s < n_sigma; ++s) {
    const auto spec = kernel::KernelSpec::rbf(sigma2s[static_cast<std::size_t>(s)]);
    for (int f = 0; f < k; ++f) {
      const auto idx = fold_indices(assignment, f);
      const Eigen::MatrixXd x_train = gather_rows(X, idx.train);
      const Eigen::VectorXd y_train = gather(y, idx.train);
      const Eigen::MatrixXd x_held = gather_rows(X, idx.held);
      const Eigen::VectorXd y_held = gather(y, idx.held);

      GramBundle bundle = kernel::gram_matrix(spec, x_train);
      kernel::eigendecompose(bundle);
      const Eigen::MatrixXd cross = kernel::cross_gram(spec, x_train, x_held);

      for (std::size_t l = 0; l < n_level; ++l) {
        solver::KuInverseFactory factory(bundle, levels[l]);
        const auto pr = path::fit_path(factory, y_train, pconf);
        fold_means[l][static_cast<std::size_t>(s)].row(f) =
            held_out_losses(pr, cross, y_held, levels[l]).transpose();
      }
    }
  }

  std::vector<CVResult> results(n_level);
  for (std::size_t l = 0; l < n_level; ++l) {
    CVResult& res = results[l];
    res.sigma2_grid = sigma2s;
    res.lambdas = lambdas;
    res.fold_assignment = assignment;
    res.mean_loss.resize(n_sigma, n_lambda);
    res.se_loss.resize(n_sigma, n_lambda);
    for (Eigen::Index s = 0; s < n_sigma; ++s) {
      const Eigen::MatrixXd& fm = fold_means[l][static_cast<std::size_t>(s)];
      for (Eigen::Index j = 0; j < n_lambda; ++j) {
        const double mean = fm.col(j).mean();
        const double var =
            (fm.col(j).array() - mean).square().sum() / static_cast<double>(k - 1);
        res.mean_loss(s, j) = mean;
        res.se_loss(s, j) = std::sqrt(var / static_cast<double>(k));
      }
    }

    // smallest loss; ties prefer larger lambda (smaller j), then smaller bandwidth
    Eigen::Index bs = 0, bj = 0;
    for (Eigen::Index s = 0; s < n_sigma; ++s)
      for (Eigen::Index j = 0; j < n_lambda; ++j) {
        const double cand = res.mean_loss(s, j);
        const double best = res.mean_loss(bs, bj);
        const bool better = cand < best || (cand == best && (j < bj || (j == bj && s < bs)));
        if (better && (s != bs || j != bj)) {
          bs = s;
          bj = j;
        }
      }
    res.best_sigma2_index = static_cast<int>(bs);
    res.best_lambda_index = static_cast<int>(bj);
    res.best_sigma2 = sigma2s[static_cast<std::size_t>(bs)];
    res.best_lambda = lambdas[bj];
  }
  return results;
}

}  // namespace kere::select
