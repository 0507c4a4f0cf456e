#pragma once

#include <stdexcept>

namespace kere::loss {

/** Asymmetry level of the expectile loss, validated to lie in (0, 1). */
class ExpectileLevel {
 public:
  explicit ExpectileLevel(double omega) : omega_(omega) {
    if (!(omega > 0.0 && omega < 1.0))
      throw std::invalid_argument("expectile level must lie strictly between 0 and 1");
  }

  double omega() const { return omega_; }
  /// Weight applied to positive residuals.
  double upper_weight() const { return omega_; }
  /// Weight applied to nonpositive residuals.
  double lower_weight() const { return 1.0 - omega_; }
  double max_weight() const { return omega_ > 0.5 ? omega_ : 1.0 - omega_; }
  double min_weight() const { return omega_ > 0.5 ? 1.0 - omega_ : omega_; }

 private:
  double omega_;
};

/** Asymmetric squared loss: (1-omega) t^2 for t <= 0, omega t^2 for t > 0. */
inline double loss_value(double t, ExpectileLevel w) {
  return (t > 0.0 ? w.upper_weight() : w.lower_weight()) * t * t;
}

/// Derivative of loss_value in t; continuous, with value 0 at t = 0.
inline double loss_grad(double t, ExpectileLevel w) {
  return 2.0 * (t > 0.0 ? w.upper_weight() : w.lower_weight()) * t;
}

/// Smallest L with |loss_grad(s) - loss_grad(t)| <= L |s - t|.
inline double lipschitz_constant(ExpectileLevel w) { return 2.0 * w.max_weight(); }

/** Convex conjugate of the loss: t^2 / (4(1-omega)) for t <= 0, t^2 / (4 omega) else. */
inline double conjugate_value(double t, ExpectileLevel w) {
  return t * t / (4.0 * (t > 0.0 ? w.upper_weight() : w.lower_weight()));
}

/// Derivative of conjugate_value; inverts loss_grad exactly.
inline double conjugate_grad(double t, ExpectileLevel w) {
  return t / (2.0 * (t > 0.0 ? w.upper_weight() : w.lower_weight()));
}

}  // namespace kere::loss
