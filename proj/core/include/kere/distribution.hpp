#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <vector>

#include "kere/loss.hpp"
#include "kere/random.hpp"

namespace kere::loss {

struct MixtureComponent {
  double weight;
  double mean;
  double sd;
};

/** Scalar distribution with a seeded sampler and analytic partial means.
 *
 *  The partial means E(Y - b)_+ and E(b - Y)_+ are closed form for every
 *  built-in family; from_density integrates a user-supplied pdf on a finite
 *  support with adaptive Simpson quadrature (absolute tolerance 1e-9) and
 *  carries no sampler.
 */
class ScalarDistribution {
 public:
  static ScalarDistribution normal(double mean, double sd);
  static ScalarDistribution laplace(double mean, double scale);
  /// Student t with 4 degrees of freedom (mean 0, variance 2).
  static ScalarDistribution student_t4();
  static ScalarDistribution uniform(double lo, double hi);
  static ScalarDistribution normal_mixture(std::vector<MixtureComponent> components);
  static ScalarDistribution empirical(std::vector<double> values);
  static ScalarDistribution from_density(std::function<double(double)> pdf, double lo,
                                         double hi);

  bool has_sampler() const { return family_ != Family::density; }

  /// Draws one value; throws std::logic_error when has_sampler() is false.
  double sample(UniformStream& stream) const;

  /// n draws from a fresh stream; identical seeds give identical vectors.
  Eigen::VectorXd sample_vector(Eigen::Index n, std::uint64_t seed) const;

  double mean() const;
  double sd() const;
  double upper_partial_mean(double b) const;  ///< E (Y - b)_+
  double lower_partial_mean(double b) const;  ///< E (b - Y)_+

 private:
  enum class Family { normal, laplace, student_t4, uniform, mixture, empirical, density };

  ScalarDistribution() = default;

  Family family_ = Family::normal;
  double a_ = 0.0;  // mean (normal, laplace) or lower bound (uniform)
  double b_ = 1.0;  // sd / scale or upper bound
  std::vector<MixtureComponent> components_;
  std::vector<double> sorted_values_;
  std::vector<double> prefix_sums_;
  std::function<double(double)> pdf_;
  double support_lo_ = 0.0;
  double support_hi_ = 0.0;
  double cached_mean_ = 0.0;
  double cached_sd_ = 0.0;
};

/** Expectile of a distribution: the root of
 *  omega E(Y - b)_+ = (1 - omega) E(b - Y)_+,
 *  located by bisection on an expanding bracket around the mean.
 *
 *  tol bounds the first-order condition residual at the returned point.
 *  Throws std::domain_error when no sign change is found after many
 *  bracket expansions (degenerate descriptor).
 */
double population_expectile(const ScalarDistribution& dist, ExpectileLevel level,
                            double tol = 1e-10);

/// Expectile of a finite sample (exact first-order condition by bisection).
double empirical_expectile(const Eigen::VectorXd& values, ExpectileLevel level,
                           double tol = 1e-10);

}  // namespace kere::loss
