#pragma once

#include <Eigen/Core>

#include <memory>
#include <optional>
#include <vector>

#include "kere/kernel.hpp"
#include "kere/loss.hpp"

namespace kere::solver {

/** Fitted function in augmented form: value at x is
 *  intercept + sum_j alpha[j] k(x_j, x). */
struct Coefficients {
  double intercept = 0.0;
  Eigen::VectorXd alpha;

  static Coefficients zero(Eigen::Index n) { return {0.0, Eigen::VectorXd::Zero(n)}; }
};

struct FitOptions {
  /// Absolute step tolerance; values <= 0 select tol_scale * (1 + max|y_i|).
  double tol = -1.0;
  /// Relative tolerance used when tol is not set explicitly.
  double tol_scale = 1e-8;
  int max_iter = 100;
  /// Fill FitDiagnostics::rate_bound (costs one generalized eigensolve).
  bool compute_rate_bound = false;
  /// Record the per-iteration objective ratios after the run.
  bool record_contractions = true;
};

struct FitDiagnostics {
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
  /// Scaled stationarity residual at the returned coefficients.
  double certificate = 0.0;
  /// Objective value after each update; nonincreasing up to roundoff.
  std::vector<double> objective_trace;
  /// (F_k+1 - F_final) / (F_k - F_final) wherever the denominator is
  /// meaningfully positive; each entry stays below the rate bound.
  std::vector<double> contraction_ratios;
  /// Worst-case objective contraction factor, when requested and well posed.
  std::optional<double> rate_bound;
};

struct FitResult {
  Coefficients coef;
  FitDiagnostics diag;
};

/** Shared per-problem caches for applying the inverse of the surrogate
 *  curvature matrix at many penalty values.
 *
 *  The curvature matrix of the quadratic majorizer is
 *      H(lambda) = hw * [[n, 1^T K], [K 1, K K + (lambda/hw) K]],
 *  with hw = max(omega, 1 - omega).  Its inverse is applied through a block
 *  partition of the augmented system, a rank-one (Sherman-Morrison) update
 *  of the centered block, and the spectral decomposition K = U diag(d) U^T,
 *  so that a new lambda costs O(n^2) once and each application two
 *  multiplications by U.  Zero eigenvalues (after clamping) are handled by
 *  the pseudo-inverse, which leaves the unused null space untouched.
 */
class KuInverseFactory {
 public:
  /// bundle must be decomposed and outlive the factory.
  KuInverseFactory(const kernel::GramBundle& bundle, loss::ExpectileLevel level);

  const kernel::GramBundle& bundle() const { return *bundle_; }
  loss::ExpectileLevel level() const { return level_; }

  /** Applies H(lambda)^{-1} for one fixed lambda.  Vectors carry the
   *  intercept in slot 0 followed by the n kernel coefficients. */
  class Applier {
   public:
    double lambda() const { return lambda_; }
    Eigen::VectorXd apply(const Eigen::VectorXd& w) const;
    /// Materializes the full (n+1) x (n+1) inverse; intended for testing.
    Eigen::MatrixXd dense() const;

   private:
    friend class KuInverseFactory;
    const KuInverseFactory* owner_ = nullptr;
    double lambda_ = 0.0;
    Eigen::VectorXd inv_diag;        // 1 / (d_i^2 + (lambda/hw) d_i), 0 on the null space
    Eigen::VectorXd h;               // A^+ K1
    double one_plus_g = 1.0;         // 1 + trace of the rank-one correction
    // Fallback when the rank-one denominator degenerates numerically.
    std::shared_ptr<Eigen::MatrixXd> dense_center_inverse;
  };

  /// lambda must be positive.
  Applier at(double lambda) const;

 private:
  friend class Applier;
  const kernel::GramBundle* bundle_;
  loss::ExpectileLevel level_;
  Eigen::VectorXd k_one_;    // K 1
  Eigen::VectorXd ut_one_;   // U^T 1
};

/// Empirical loss plus penalty: sum_i loss(y_i - f(x_i)) + lambda a^T K a.
double objective(const Coefficients& coef, const kernel::GramBundle& bundle,
                 const Eigen::VectorXd& y, loss::ExpectileLevel level, double lambda);

/** One majorize-minimize update from coef; residuals must equal
 *  y - intercept - K alpha for the given coef.  A stationary point maps to
 *  itself (up to roundoff). */
Coefficients mm_step(const Coefficients& coef, const Eigen::VectorXd& residuals,
                     const KuInverseFactory::Applier& inverse,
                     const kernel::GramBundle& bundle, loss::ExpectileLevel level,
                     double lambda);

/** Scaled residual of the stationarity conditions,
 *      max(max_i |2 lambda alpha_i - loss_grad(r_i)|, 2 lambda |sum_i alpha_i|)
 *  divided by (1 + max|y_i|); zero exactly at a global minimizer. */
double optimality_certificate(const Coefficients& coef, const kernel::GramBundle& bundle,
                              const Eigen::VectorXd& y, loss::ExpectileLevel level,
                              double lambda);

/** Iterates mm_step from init (zero when absent) until either the step is
 *  small (max|delta| <= tol) or the unscaled stationarity residual drops
 *  below tol, or max_iter is hit (then converged = false).  The certificate
 *  is evaluated at the returned coefficients either way. */
FitResult fit(const KuInverseFactory& factory, const Eigen::VectorXd& y, double lambda,
              const Coefficients* init = nullptr, const FitOptions& options = {});

/// Convenience overload; decomposes the bundle when necessary.
FitResult fit(kernel::GramBundle& bundle, const Eigen::VectorXd& y,
              loss::ExpectileLevel level, double lambda, const Coefficients* init = nullptr,
              const FitOptions& options = {});

/** Worst-case objective contraction factor Gamma in [0, 1): one minus the
 *  smallest eigenvalue of H^{-1} L, where H and L majorize and minorize the
 *  loss curvature with weights max(omega, 1-omega) and min(omega, 1-omega).
 *  Computed through the symmetric similarity transform of the generalized
 *  problem.  Returns nullopt when the unpenalized curvature is numerically
 *  singular (smallest eigenvalue at most 1e-10), which makes the minorant
 *  indefinite.  Equals 0 at omega = 1/2, where one update is exact. */
std::optional<double> rate_bound(const kernel::GramBundle& bundle,
                                 loss::ExpectileLevel level, double lambda);

/** Dual objective -y^T a + a^T K a / 2 + 2 lambda sum_i conj(a_i) for a
 *  feasible dual vector (sum_i a_i = 0 within 1e-8, else throws).  Its
 *  minimum relates to the primal minimum by F = -2 lambda g. */
double dual_objective(const Eigen::VectorXd& alpha, const kernel::GramBundle& bundle,
                      const Eigen::VectorXd& y, loss::ExpectileLevel level, double lambda);

/** A priori per-index bound on fitted |alpha_i| implied by objective
 *  comparison with the zero solution; depends only on (y, level, lambda)
 *  and the largest kernel diagonal entry. */
Eigen::VectorXd coefficient_bound(const kernel::GramBundle& bundle, const Eigen::VectorXd& y,
                                  loss::ExpectileLevel level, double lambda);

}  // namespace kere::solver
