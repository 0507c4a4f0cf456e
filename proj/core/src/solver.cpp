#include "kere/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace kere::solver {

using kernel::GramBundle;
using loss::ExpectileLevel;

KuInverseFactory::KuInverseFactory(const GramBundle& bundle, ExpectileLevel level)
    : bundle_(&bundle), level_(level) {
  if (!bundle.decomposed)
    throw std::invalid_argument("KuInverseFactory requires a decomposed bundle");
  k_one_ = bundle.kernel.rowwise().sum();
  ut_one_ = bundle.eigenvectors.colwise().sum().transpose();
}

KuInverseFactory::Applier KuInverseFactory::at(double lambda) const {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const Eigen::Index n = bundle_->size();
  const Eigen::VectorXd& d = bundle_->eigenvalues;
  const double c = lambda / level_.max_weight();

  Applier ap;
  ap.owner_ = this;
  ap.lambda_ = lambda;
  ap.inv_diag.resize(n);
  Eigen::VectorXd t(n);  // h in the eigenbasis
  double mass_range = 0.0, mass_null = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s2 = ut_one_[i] * ut_one_[i];
    if (d[i] > 0.0) {
      ap.inv_diag[i] = 1.0 / (d[i] * (d[i] + c));
      t[i] = ut_one_[i] / (d[i] + c);
      mass_range += s2 * c / (d[i] + c);
    } else {
      ap.inv_diag[i] = 0.0;
      t[i] = 0.0;
      mass_null += s2;
    }
  }
  ap.h = bundle_->eigenvectors * t;
  // Stable form of 1 + trace correction; strictly positive in exact
  // arithmetic, so the fallback below triggers only at extreme scales.
  ap.one_plus_g = (mass_range + mass_null) / static_cast<double>(n);

  if (ap.one_plus_g < 1e-12) {
    Eigen::MatrixXd center =
        bundle_->eigenvectors *
            (d.array() * (d.array() + c)).matrix().asDiagonal() *
            bundle_->eigenvectors.transpose() -
        (1.0 / static_cast<double>(n)) * k_one_ * k_one_.transpose();
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(center);
    ap.dense_center_inverse = std::make_shared<Eigen::MatrixXd>(cod.pseudoInverse());
  }
  return ap;
}

Eigen::VectorXd KuInverseFactory::Applier::apply(const Eigen::VectorXd& w) const {
  const Eigen::Index n = owner_->bundle_->size();
  if (w.size() != n + 1)
    throw std::invalid_argument("apply expects an augmented vector of length n + 1");
  const double w0 = w[0];
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::VectorXd v = w.tail(n) - (w0 * inv_n) * owner_->k_one_;
  Eigen::VectorXd z;
  if (dense_center_inverse) {
    z.noalias() = (*dense_center_inverse) * v;
  } else {
    Eigen::VectorXd uv = owner_->bundle_->eigenvectors.transpose() * v;
    z.noalias() = owner_->bundle_->eigenvectors * (inv_diag.array() * uv.array()).matrix();
    z += (h.dot(v) * inv_n / one_plus_g) * h;
  }

  Eigen::VectorXd out(n + 1);
  out[0] = (w0 - owner_->k_one_.dot(z)) * inv_n;
  out.tail(n) = z;
  out /= owner_->level_.max_weight();
  return out;
}

Eigen::MatrixXd KuInverseFactory::Applier::dense() const {
  const Eigen::Index n = owner_->bundle_->size();
  Eigen::MatrixXd out(n + 1, n + 1);
  Eigen::VectorXd basis = Eigen::VectorXd::Zero(n + 1);
  for (Eigen::Index j = 0; j <= n; ++j) {
    basis[j] = 1.0;
    out.col(j) = apply(basis);
    basis[j] = 0.0;
  }
  return out;
}

double objective(const Coefficients& coef, const GramBundle& bundle, const Eigen::VectorXd& y,
                 ExpectileLevel level, double lambda) {
  const Eigen::Index n = bundle.size();
  if (coef.alpha.size() != n || y.size() != n)
    throw std::invalid_argument("objective: size mismatch");
  Eigen::VectorXd ka = bundle.kernel * coef.alpha;
  double value = lambda * coef.alpha.dot(ka);
  for (Eigen::Index i = 0; i < n; ++i)
    value += loss::loss_value(y[i] - coef.intercept - ka[i], level);
  return value;
}

Coefficients mm_step(const Coefficients& coef, const Eigen::VectorXd& residuals,
                     const KuInverseFactory::Applier& inverse, const GramBundle& bundle,
                     ExpectileLevel level, double lambda) {
  const Eigen::Index n = bundle.size();
  if (coef.alpha.size() != n || residuals.size() != n)
    throw std::invalid_argument("mm_step: size mismatch");
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = loss::loss_grad(residuals[i], level);

  Eigen::VectorXd w(n + 1);
  w[0] = 0.5 * v.sum();
  w.tail(n).noalias() = bundle.kernel * (0.5 * v - lambda * coef.alpha);

  const Eigen::VectorXd delta = inverse.apply(w);
  Coefficients next;
  next.intercept = coef.intercept + delta[0];
  next.alpha = coef.alpha + delta.tail(n);
  return next;
}

double optimality_certificate(const Coefficients& coef, const GramBundle& bundle,
                              const Eigen::VectorXd& y, ExpectileLevel level, double lambda) {
  const Eigen::Index n = bundle.size();
  if (coef.alpha.size() != n || y.size() != n)
    throw std::invalid_argument("optimality_certificate: size mismatch");
  Eigen::VectorXd ka = bundle.kernel * coef.alpha;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = y[i] - coef.intercept - ka[i];
    worst = std::max(worst, std::abs(2.0 * lambda * coef.alpha[i] - loss::loss_grad(r, level)));
  }
  worst = std::max(worst, 2.0 * lambda * std::abs(coef.alpha.sum()));
  return worst / (1.0 + y.cwiseAbs().maxCoeff());
}

FitResult fit(const KuInverseFactory& factory, const Eigen::VectorXd& y, double lambda,
              const Coefficients* init, const FitOptions& options) {
  const GramBundle& bundle = factory.bundle();
  const ExpectileLevel level = factory.level();
  const Eigen::Index n = bundle.size();
  if (y.size() != n) throw std::invalid_argument("fit: response length mismatch");
  if (options.max_iter < 1) throw std::invalid_argument("fit: max_iter must be positive");
  if (init && init->alpha.size() != n)
    throw std::invalid_argument("fit: warm start has wrong length");

  const double yscale = 1.0 + y.cwiseAbs().maxCoeff();
  const double tol = options.tol > 0.0 ? options.tol : options.tol_scale * yscale;

  Coefficients coef = init ? *init : Coefficients::zero(n);
  const KuInverseFactory::Applier inverse = factory.at(lambda);

  Eigen::VectorXd ka =
      init ? Eigen::VectorXd(bundle.kernel * coef.alpha) : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = y.array() - coef.intercept - ka.array();

  FitDiagnostics diag;
  diag.objective_trace.reserve(static_cast<std::size_t>(options.max_iter));
  Eigen::VectorXd v(n), w(n + 1), delta;

  for (int it = 1; it <= options.max_iter; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) v[i] = loss::loss_grad(r[i], level);
    w[0] = 0.5 * v.sum();
    w.tail(n).noalias() = bundle.kernel * (0.5 * v - lambda * coef.alpha);
    delta = inverse.apply(w);
    coef.intercept += delta[0];
    coef.alpha += delta.tail(n);

    ka.noalias() = bundle.kernel * coef.alpha;
    r = y.array() - coef.intercept - ka.array();

    double value = lambda * coef.alpha.dot(ka);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      value += loss::loss_value(r[i], level);
      worst = std::max(worst,
                       std::abs(2.0 * lambda * coef.alpha[i] - loss::loss_grad(r[i], level)));
    }
    worst = std::max(worst, 2.0 * lambda * std::abs(coef.alpha.sum()));
    const double cert = worst / yscale;

    diag.objective_trace.push_back(value);
    diag.iterations = it;
    diag.certificate = cert;

    // a vanishing step always certifies a fixed point of the update map; the
    // stationarity residual can additionally stop one sweep earlier when the
    // quadratic surrogate is exact, but it need not reach zero on a gram
    // matrix whose trailing eigenvalues were clamped away.
    if (delta.lpNorm<Eigen::Infinity>() <= tol || worst <= tol) {
      diag.converged = true;
      break;
    }
  }

  diag.objective = diag.objective_trace.back();
  if (options.record_contractions && diag.objective_trace.size() >= 2) {
    const double f_final = diag.objective_trace.back();
    const double floor = 1e-13 * (1.0 + std::abs(f_final));
    for (std::size_t k = 0; k + 1 < diag.objective_trace.size(); ++k) {
      const double den = diag.objective_trace[k] - f_final;
      if (den <= floor) break;
      const double num = diag.objective_trace[k + 1] - f_final;
      diag.contraction_ratios.push_back(std::max(0.0, num / den));
    }
  }
  if (options.compute_rate_bound) diag.rate_bound = rate_bound(bundle, level, lambda);
  return {std::move(coef), std::move(diag)};
}

FitResult fit(GramBundle& bundle, const Eigen::VectorXd& y, ExpectileLevel level,
              double lambda, const Coefficients* init, const FitOptions& options) {
  kernel::eigendecompose(bundle);
  KuInverseFactory factory(bundle, level);
  return fit(factory, y, lambda, init, options);
}

std::optional<double> rate_bound(const GramBundle& bundle, ExpectileLevel level,
                                 double lambda) {
  const Eigen::Index n = bundle.size();
  const Eigen::MatrixXd& K = bundle.kernel;
  const Eigen::VectorXd k_one = K.rowwise().sum();

  // both curvature blocks are strictly positive definite for every lambda > 0
  // exactly when the kernel matrix itself is nonsingular; the moment matrix
  // alone always has a rank deficiency of one, so it cannot carry the check.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gram_eigs(K, Eigen::EigenvaluesOnly);
  if (gram_eigs.eigenvalues().minCoeff() <= 1e-10) return std::nullopt;

  Eigen::MatrixXd S(n + 1, n + 1);
  S(0, 0) = static_cast<double>(n);
  S.block(0, 1, 1, n) = k_one.transpose();
  S.block(1, 0, n, 1) = k_one;
  S.block(1, 1, n, n).noalias() = K * K;

  // at the symmetric level both blocks are the same matrix, so every
  // generalized eigenvalue is exactly one; the solve would only add noise
  if (level.min_weight() == level.max_weight()) return 0.0;

  Eigen::MatrixXd upper = level.max_weight() * S;
  Eigen::MatrixXd lower = level.min_weight() * S;
  upper.block(1, 1, n, n) += lambda * K;
  lower.block(1, 1, n, n) += lambda * K;

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> pencil(
      lower, upper, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (pencil.info() != Eigen::Success) return std::nullopt;
  const double gamma_min = pencil.eigenvalues().minCoeff();
  return std::clamp(1.0 - gamma_min, 0.0, 1.0);
}

double dual_objective(const Eigen::VectorXd& alpha, const GramBundle& bundle,
                      const Eigen::VectorXd& y, ExpectileLevel level, double lambda) {
  const Eigen::Index n = bundle.size();
  if (alpha.size() != n || y.size() != n)
    throw std::invalid_argument("dual_objective: size mismatch");
  if (std::abs(alpha.sum()) > 1e-8)
    throw std::invalid_argument("dual_objective: vector violates the zero-sum constraint");
  double value = -y.dot(alpha) + 0.5 * alpha.dot(bundle.kernel * alpha);
  for (Eigen::Index i = 0; i < n; ++i) value += 2.0 * lambda * loss::conjugate_value(alpha[i], level);
  return value;
}

Eigen::VectorXd coefficient_bound(const GramBundle& bundle, const Eigen::VectorXd& y,
                                  ExpectileLevel level, double lambda) {
  const Eigen::Index n = bundle.size();
  if (y.size() != n) throw std::invalid_argument("coefficient_bound: size mismatch");
  if (!(lambda > 0.0)) throw std::invalid_argument("coefficient_bound: lambda must be positive");
  const double q1 = level.max_weight() / level.min_weight();
  const double q2 = level.max_weight();
  const double m = std::sqrt(std::max(0.0, bundle.kernel.diagonal().maxCoeff()));
  const double base = q1 * y.lpNorm<1>() / static_cast<double>(n) +
                      m * (q1 + 1.0) * std::sqrt(q2 / lambda) * y.norm();
  return (q2 / lambda) * (y.cwiseAbs().array() + base);
}

}  // namespace kere::solver
