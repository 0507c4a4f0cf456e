#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

#include "kere/distribution.hpp"
#include "kere/loss.hpp"
#include "kere/random.hpp"

namespace kere::sim {

/// Error families of the single-covariate benchmark.
enum class Sim1Error { laplace, mixed_normal };
/// Error families of the multivariate benchmark.
enum class Sim2Error { normal, student_t4, mixed_normal };

loss::ScalarDistribution error_distribution(Sim1Error family);
loss::ScalarDistribution error_distribution(Sim2Error family);

/// Expectile b of the error family (root of the asymmetric first-order
/// condition); 0 at level 1/2 for the symmetric families.
double error_expectile(Sim1Error family, loss::ExpectileLevel level);
double error_expectile(Sim2Error family, loss::ExpectileLevel level);

struct SimData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

/** Single-covariate heteroscedastic design
 *      y = sin(0.7 x) + x^2 / 20 + ((|x| + 1) / 5) eps,  x ~ U[-8, 8]. */
struct Sim1Spec {
  Eigen::Index n = 400;
  Sim1Error error = Sim1Error::mixed_normal;
  std::uint64_t seed = 0;
};

double sim1_mean(double x);         ///< sin(0.7 x) + x^2 / 20
double sim1_noise_scale(double x);  ///< (|x| + 1) / 5

SimData sim1_generate(const Sim1Spec& spec);

double sim1_true_expectile(Sim1Error family, double x, loss::ExpectileLevel level);
Eigen::VectorXd sim1_true_expectile(Sim1Error family, const Eigen::VectorXd& x,
                                    loss::ExpectileLevel level);

/** Sum of 20 weighted Gaussian bumps on random coordinate subsets; weights
 *  lie in [-1, 1], so |f| <= 20 everywhere. */
class RandomFunction {
 public:
  static RandomFunction draw(int p, std::uint64_t seed);

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd evaluate_rows(const Eigen::MatrixXd& X) const;

  struct Term {
    double weight;                       // a in [-1, 1]
    std::vector<Eigen::Index> subset;    // coordinate indices, size p_term
    Eigen::VectorXd center;              // mu ~ N(0, I)
    Eigen::MatrixXd curvature;           // V = U diag(d) U^T, sqrt(d) ~ U[0.1, 2]
  };
  const std::vector<Term>& terms() const { return terms_; }

 private:
  std::vector<Term> terms_;
};

/** Multivariate design y = f1(x) + |f2(x)| eps with x ~ N(0, I_p); the
 *  homoscedastic variant fixes f2 = 1.  Functions are drawn when the spec
 *  is made and survive resizing, so train and test sets share them. */
struct Sim2Spec {
  Eigen::Index n = 300;
  int p = 10;
  bool heteroscedastic = false;
  Sim2Error error = Sim2Error::normal;
  std::uint64_t seed = 0;
  RandomFunction f1;
  std::optional<RandomFunction> f2;

  static Sim2Spec make(Eigen::Index n, int p, bool heteroscedastic, Sim2Error error,
                       std::uint64_t seed);
  /// Same functions, new sample size and seed (e.g. for a test set).
  Sim2Spec resized(Eigen::Index n, std::uint64_t seed) const;
};

SimData sim2_generate(const Sim2Spec& spec);

double sim2_true_expectile(const Sim2Spec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                           loss::ExpectileLevel level);
Eigen::VectorXd sim2_true_expectile(const Sim2Spec& spec, const Eigen::MatrixXd& X,
                                    loss::ExpectileLevel level);

/// Mean absolute deviation between two curves of equal length.
double mad(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth);

/// Mean expectile loss of fitted values against observed responses.
double prediction_error(const Eigen::VectorXd& y, const Eigen::VectorXd& fitted,
                        loss::ExpectileLevel level);

}  // namespace kere::sim
