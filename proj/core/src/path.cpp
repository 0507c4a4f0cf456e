#include "kere/path.hpp"

#include <cmath>
#include <stdexcept>

namespace kere::path {

Eigen::VectorXd lambda_sequence(double hi, double lo, int count) {
  if (!(lo > 0.0) || !(hi >= lo))
    throw std::invalid_argument("lambda_sequence requires hi >= lo > 0");
  if (count < 1) throw std::invalid_argument("lambda_sequence requires count >= 1");
  Eigen::VectorXd grid(count);
  grid[0] = hi;
  if (count == 1) return grid;
  const double lhi = std::log(hi), llo = std::log(lo);
  for (int i = 1; i + 1 < count; ++i)
    grid[i] = std::exp(lhi + (llo - lhi) * static_cast<double>(i) / (count - 1));
  grid[count - 1] = lo;
  return grid;
}

double default_lambda_max(const solver::KuInverseFactory& factory, const Eigen::VectorXd& y) {
  const auto n = static_cast<double>(y.size());
  double lambda = std::max(y.squaredNorm() / n, 1e-8);

  solver::FitOptions probe;
  probe.tol = 1e-6 * (1.0 + y.cwiseAbs().maxCoeff());
  probe.max_iter = 25;
  probe.record_contractions = false;

  for (int doubling = 0; doubling < 60; ++doubling) {
    const auto result = solver::fit(factory, y, lambda, nullptr, probe);
    if (result.coef.alpha.cwiseAbs().maxCoeff() <= 1e-4) break;
    lambda *= 2.0;
  }
  return lambda;
}

PathResult fit_path(const solver::KuInverseFactory& factory, const Eigen::VectorXd& y,
                    const PathConfig& config) {
  const double hi =
      config.lambda_max > 0.0 ? config.lambda_max : default_lambda_max(factory, y);
  const double lo = config.lambda_min > 0.0 ? config.lambda_min : 1e-4 * hi;

  PathResult out;
  out.lambdas = lambda_sequence(hi, lo, config.num_lambdas);
  out.coefficients.reserve(config.num_lambdas);
  out.diagnostics.reserve(config.num_lambdas);
  out.all_converged = true;

  solver::FitOptions options = config.fit;
  options.compute_rate_bound = config.compute_rate_bound;

  const solver::Coefficients* warm = nullptr;
  for (int i = 0; i < config.num_lambdas; ++i) {
    auto result = solver::fit(factory, y, out.lambdas[i], warm, options);
    out.all_converged = out.all_converged && result.diag.converged;
    out.coefficients.push_back(std::move(result.coef));
    out.diagnostics.push_back(std::move(result.diag));
    warm = &out.coefficients.back();
  }
  return out;
}

PathResult fit_path(kernel::GramBundle& bundle, const Eigen::VectorXd& y,
                    loss::ExpectileLevel level, const PathConfig& config) {
  kernel::eigendecompose(bundle);
  solver::KuInverseFactory factory(bundle, level);
  return fit_path(factory, y, config);
}

}  // namespace kere::path
