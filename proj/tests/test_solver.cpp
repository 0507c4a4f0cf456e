// Tests for the majorize-minimize solver: the factored curvature inverse
// against dense linear algebra, descent, fixed points, agreement with
// independent minimizers, the stationarity certificate, the contraction
// bound, duality and the a priori coefficient bound.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <optional>

#include "kere/kernel.hpp"
#include "kere/path.hpp"
#include "kere/random.hpp"
#include "kere/solver.hpp"
#include "oracles.hpp"

using namespace kere;
using Catch::Approx;
using kernel::KernelSpec;
using loss::ExpectileLevel;

TEST_CASE("factored curvature inverse matches dense linear algebra", "[solver]") {
  auto bundle = oracles::random_pd_rbf(12, 2, 7);
  UniformStream stream(8);

  for (double omega : {0.2, 0.5, 0.85}) {
    const solver::KuInverseFactory factory(bundle, ExpectileLevel(omega));
    for (double lambda : {0.01, 1.0, 50.0}) {
      const auto applier = factory.at(lambda);
      const Eigen::MatrixXd H = oracles::dense_curvature(bundle, ExpectileLevel(omega), lambda);
      const Eigen::MatrixXd dense_inverse = H.fullPivLu().inverse();

      // entries of the inverse grow like 1 / (lambda d_min), so compare
      // relative to the largest one; 1e-10 is near machine precision here
      const double scale = dense_inverse.cwiseAbs().maxCoeff();
      REQUIRE((applier.dense() - dense_inverse).cwiseAbs().maxCoeff() < 1e-10 * scale);

      Eigen::VectorXd w(13);
      for (Eigen::Index i = 0; i < 13; ++i) w[i] = stream.next_normal();
      const Eigen::VectorXd x_ref = H.fullPivLu().solve(w);
      REQUIRE((applier.apply(w) - x_ref).cwiseAbs().maxCoeff() <
              1e-10 * (1.0 + x_ref.cwiseAbs().maxCoeff()));
    }
  }

  SECTION("nonpositive penalties are rejected") {
    const solver::KuInverseFactory factory(bundle, ExpectileLevel(0.5));
    REQUIRE_THROWS_AS(factory.at(0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(factory.at(-1.0), std::invalid_argument);
  }
}

TEST_CASE("curvature inverse survives extreme and degenerate spectra", "[solver]") {
  SECTION("a vanishing penalty routes through the dense fallback") {
    auto bundle = oracles::random_pd_rbf(10, 2, 9);
    const solver::KuInverseFactory factory(bundle, ExpectileLevel(0.3));
    const double lambda = 1e-13;  // rank-one denominator degenerates here
    const auto applier = factory.at(lambda);
    const Eigen::MatrixXd H = oracles::dense_curvature(bundle, ExpectileLevel(0.3), lambda);

    UniformStream stream(10);
    Eigen::VectorXd w(11);
    for (Eigen::Index i = 0; i < 11; ++i) w[i] = stream.next_normal();
    const Eigen::VectorXd x = applier.apply(w);
    REQUIRE(x.allFinite());
    // the system is singular to working precision, so judge by backward
    // error; a wrong branch would leave O(1) residual, an orthogonal
    // factorization about sqrt(machine epsilon)
    const double backward = (H * x - w).norm() /
                            (H.cwiseAbs().maxCoeff() * x.norm() + w.norm());
    REQUIRE(backward < 1e-6);
  }

  SECTION("duplicated rows give an exactly singular kernel") {
    Eigen::MatrixXd X = oracles::random_design(8, 2, 11);
    X.row(7) = X.row(0);
    auto bundle = kernel::gram_matrix(KernelSpec::rbf(1.5), X);
    kernel::eigendecompose(bundle);
    REQUIRE(bundle.eigenvalues.minCoeff() == 0.0);

    // fitting on the degenerate bundle still descends and converges
    const Eigen::VectorXd y = oracles::random_response(X, 12);
    const auto result = solver::fit(bundle, y, ExpectileLevel(0.4), 0.5);
    REQUIRE(result.diag.converged);
    for (std::size_t k = 1; k < result.diag.objective_trace.size(); ++k)
      REQUIRE(result.diag.objective_trace[k] <=
              result.diag.objective_trace[k - 1] + 1e-10);
  }
}

TEST_CASE("constant responses fit an intercept-only model", "[solver]") {
  auto bundle = oracles::random_pd_rbf(15, 2, 13);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(15, 3.2);
  for (double omega : {0.3, 0.5, 0.9}) {
    const auto result = solver::fit(bundle, y, ExpectileLevel(omega), 1.0);
    REQUIRE(result.diag.converged);
    REQUIRE(result.coef.intercept == Approx(3.2).margin(1e-7));
    REQUIRE(result.coef.alpha.cwiseAbs().maxCoeff() < 1e-7);
    REQUIRE(result.diag.objective < 1e-12);
  }
}

TEST_CASE("the symmetric level converges in one step to the closed form", "[solver]") {
  for (std::uint64_t seed : {21, 22, 23, 24, 25}) {
    auto bundle = oracles::random_pd_rbf(14, 3, seed);
    const Eigen::VectorXd y = oracles::random_response(bundle.inputs, seed);
    const double lambda = 0.7;

    const auto result = solver::fit(bundle, y, ExpectileLevel(0.5), lambda);
    REQUIRE(result.diag.converged);
    REQUIRE(result.diag.iterations == 1);

    const auto closed = oracles::half_level_solution(bundle, y, lambda);
    REQUIRE(std::abs(result.coef.intercept - closed.intercept) < 1e-6);
    REQUIRE((result.coef.alpha - closed.alpha).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("updates never increase the objective", "[solver]") {
  UniformStream picker(31);
  for (int inst = 0; inst < 12; ++inst) {
    const auto n = static_cast<Eigen::Index>(10 + picker.next_below(30));
    const int p = static_cast<int>(1 + picker.next_below(4));
    const double omega = 0.05 + 0.9 * picker.next_uniform();
    const double lambda = std::exp(std::log(1e-3) + std::log(1e4) * picker.next_uniform());

    // alternate a smooth kernel with a rank-deficient polynomial one
    const Eigen::MatrixXd X = oracles::random_design(n, p, 300 + inst);
    const auto spec = inst % 2 == 0 ? KernelSpec::rbf(1.0 + p) : KernelSpec::polynomial(2, 1.0);
    auto bundle = kernel::gram_matrix(spec, X);
    const Eigen::VectorXd y = oracles::random_response(X, 400 + inst);

    const auto result = solver::fit(bundle, y, ExpectileLevel(omega), lambda);
    const auto& trace = result.diag.objective_trace;
    REQUIRE_FALSE(trace.empty());
    for (std::size_t k = 1; k < trace.size(); ++k)
      REQUIRE(trace[k] <= trace[k - 1] + 1e-10);
  }
}

TEST_CASE("a converged solution is a fixed point of the update", "[solver]") {
  auto bundle = oracles::random_pd_rbf(12, 2, 41);
  const Eigen::VectorXd y = oracles::random_response(bundle.inputs, 42);
  const double lambda = 0.8;
  const ExpectileLevel level(0.7);

  solver::FitOptions tight;
  tight.tol = 1e-12;
  tight.max_iter = 500;
  const auto result = solver::fit(bundle, y, level, lambda, nullptr, tight);
  REQUIRE(result.diag.converged);

  const solver::KuInverseFactory factory(bundle, level);
  const Eigen::VectorXd r =
      y.array() - result.coef.intercept - (bundle.kernel * result.coef.alpha).array();
  const auto next =
      solver::mm_step(result.coef, r, factory.at(lambda), bundle, level, lambda);
  REQUIRE(std::abs(next.intercept - result.coef.intercept) < 1e-8);
  REQUIRE((next.alpha - result.coef.alpha).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("the solver agrees with an independent exact minimizer", "[solver]") {
  struct Case {
    Eigen::Index n;
    double omega;
    double lambda;
    std::uint64_t seed;
  };
  for (const auto& c : {Case{10, 0.8, 0.5, 51}, Case{14, 0.3, 0.05, 52},
                        Case{12, 0.95, 2.0, 53}}) {
    auto bundle = oracles::random_pd_rbf(c.n, 2, c.seed);
    const Eigen::VectorXd y = oracles::random_response(bundle.inputs, c.seed + 100);
    const ExpectileLevel level(c.omega);

    solver::FitOptions options;
    options.max_iter = 500;
    const auto result = solver::fit(bundle, y, level, c.lambda, nullptr, options);
    REQUIRE(result.diag.converged);

    const auto exact = oracles::exact_minimizer(bundle, y, level, c.lambda);
    const double f_exact = solver::objective(exact, bundle, y, level, c.lambda);
    REQUIRE(std::abs(result.diag.objective - f_exact) <= 1e-10 * (1.0 + std::abs(f_exact)));
    REQUIRE(std::abs(result.coef.intercept - exact.intercept) < 1e-6);
    REQUIRE((result.coef.alpha - exact.alpha).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("the stationarity certificate separates optima from non-optima", "[solver]") {
  auto bundle = oracles::random_pd_rbf(10, 2, 61);
  const Eigen::VectorXd y = oracles::random_response(bundle.inputs, 62);
  const ExpectileLevel level(0.35);
  const double lambda = 0.6;

  const auto exact = oracles::exact_minimizer(bundle, y, level, lambda);
  REQUIRE(solver::optimality_certificate(exact, bundle, y, level, lambda) < 1e-8);

  solver::Coefficients perturbed = exact;
  perturbed.alpha[0] += 0.05;
  REQUIRE(solver::optimality_certificate(perturbed, bundle, y, level, lambda) > 1e-4);

  const auto zero = solver::Coefficients::zero(10);
  REQUIRE(solver::optimality_certificate(zero, bundle, y, level, lambda) > 1e-4);
}

TEST_CASE("converged fits certify near-stationarity", "[solver]") {
  for (std::uint64_t seed : {71, 72, 73}) {
    auto bundle = oracles::random_pd_rbf(16, 2, seed);
    const Eigen::VectorXd y = oracles::random_response(bundle.inputs, seed + 10);
    for (double omega : {0.1, 0.5, 0.8}) {
      const auto result = solver::fit(bundle, y, ExpectileLevel(omega), 0.4);
      REQUIRE(result.diag.converged);
      // ten times the relative step tolerance that stopped the run
      REQUIRE(result.diag.certificate <= 1e-7);
    }
  }
}

TEST_CASE("warm starts reach the same solution as cold starts", "[solver]") {
  auto bundle = oracles::random_pd_rbf(14, 2, 81);
  const Eigen::VectorXd y = oracles::random_response(bundle.inputs, 82);
  const ExpectileLevel level(0.25);

  const auto at_one = solver::fit(bundle, y, level, 1.0);
  const auto cold = solver::fit(bundle, y, level, 0.3);
  const auto warm = solver::fit(bundle, y, level, 0.3, &at_one.coef);

  REQUIRE(std::abs(warm.coef.intercept - cold.coef.intercept) < 1e-6);
  REQUIRE((warm.coef.alpha - cold.coef.alpha).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("the contraction bound has a closed form and limits progress", "[solver]") {
  auto bundle = oracles::random_pd_rbf(12, 2, 91);

  SECTION("the bound is one minus the weight ratio, independent of lambda") {
    for (double omega : {0.05, 0.2, 0.5, 0.9}) {
      const ExpectileLevel level(omega);
      const double expected = 1.0 - level.min_weight() / level.max_weight();
      for (double lambda : {0.01, 1.0, 25.0}) {
        const auto bound = solver::rate_bound(bundle, level, lambda);
        REQUIRE(bound.has_value());
        REQUIRE(*bound == Approx(expected).margin(1e-8));
        REQUIRE(*bound ==
                Approx(oracles::rate_bound_nonsymmetric(bundle, level, lambda)).margin(1e-8));
      }
    }
  }

  SECTION("the symmetric level contracts completely") {
    const auto bound = solver::rate_bound(bundle, ExpectileLevel(0.5), 1.0);
    REQUIRE(bound.has_value());
    REQUIRE(*bound <= 1e-12);
  }

  SECTION("a singular kernel voids the bound") {
    Eigen::MatrixXd X = oracles::random_design(8, 2, 92);
    X.row(7) = X.row(0);
    auto singular = kernel::gram_matrix(KernelSpec::rbf(1.5), X);
    kernel::eigendecompose(singular);
    REQUIRE_FALSE(solver::rate_bound(singular, ExpectileLevel(0.2), 1.0).has_value());
  }

  SECTION("objective gaps shrink at least geometrically at the bound") {
    const Eigen::VectorXd y = oracles::random_response(bundle.inputs, 93);
    const ExpectileLevel level(0.2);
    const double lambda = 0.5;
    const double gamma = *solver::rate_bound(bundle, level, lambda);

    // reference minimum from an independent algorithm
    const double f_hat = solver::objective(oracles::exact_minimizer(bundle, y, level, lambda),
                                           bundle, y, level, lambda);

    const auto result = solver::fit(bundle, y, level, lambda);
    const auto& trace = result.diag.objective_trace;
    for (std::size_t k = 0; k + 1 < trace.size(); ++k) {
      const double den = trace[k] - f_hat;
      if (den <= 1e-13 * (1.0 + std::abs(f_hat))) break;
      REQUIRE((trace[k + 1] - f_hat) / den <= gamma + 1e-8);
    }

    // the recorded ratios against the run's own final value obey it too
    for (double ratio : result.diag.contraction_ratios) REQUIRE(ratio <= gamma + 1e-8);
  }
}

TEST_CASE("duality relates the dual value to the primal minimum", "[solver]") {
  auto bundle = oracles::random_pd_rbf(12, 2, 95);
  const Eigen::VectorXd y = oracles::random_response(bundle.inputs, 96);
  const ExpectileLevel level(0.35);
  const double lambda = 0.8;

  solver::FitOptions tight;
  tight.tol = 1e-13;
  tight.max_iter = 1000;
  const auto result = solver::fit(bundle, y, level, lambda, nullptr, tight);
  const double f_hat = result.diag.objective;

  // the fitted coefficients are dual feasible (they sum to zero at the
  // optimum); center them to remove the residual drift before evaluating
  Eigen::VectorXd a = result.coef.alpha;
  a.array() -= a.mean();

  SECTION("strong duality at the solution") {
    const double g = solver::dual_objective(a, bundle, y, level, lambda);
    REQUIRE(-2.0 * lambda * g == Approx(f_hat).margin(1e-6 * (1.0 + std::abs(f_hat))));
  }

  SECTION("weak duality for arbitrary feasible vectors") {
    UniformStream stream(97);
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::VectorXd v(12);
      for (Eigen::Index i = 0; i < 12; ++i) v[i] = 0.3 * stream.next_normal();
      v.array() -= v.mean();
      const double g = solver::dual_objective(v, bundle, y, level, lambda);
      REQUIRE(-2.0 * lambda * g <= f_hat + 1e-9 * (1.0 + std::abs(f_hat)));
    }
  }

  SECTION("vectors off the constraint are rejected") {
    Eigen::VectorXd bad = Eigen::VectorXd::Ones(12);
    REQUIRE_THROWS_AS(solver::dual_objective(bad, bundle, y, level, lambda),
                      std::invalid_argument);
  }
}

TEST_CASE("the a priori coefficient bound contains every fitted value", "[solver]") {
  UniformStream picker(98);
  for (int inst = 0; inst < 10; ++inst) {
    auto bundle = oracles::random_pd_rbf(static_cast<Eigen::Index>(10 + picker.next_below(15)),
                                         2, 500 + inst);
    const Eigen::VectorXd y = oracles::random_response(bundle.inputs, 600 + inst);
    const double omega = 0.05 + 0.9 * picker.next_uniform();
    const double lambda = std::exp(std::log(0.01) + std::log(1e3) * picker.next_uniform());

    const ExpectileLevel level(omega);
    const auto result = solver::fit(bundle, y, level, lambda);
    const Eigen::VectorXd bound = solver::coefficient_bound(bundle, y, level, lambda);
    REQUIRE(bound.minCoeff() > 0.0);
    for (Eigen::Index i = 0; i < y.size(); ++i)
      REQUIRE(std::abs(result.coef.alpha[i]) <= bound[i] + 1e-12);
  }
}

TEST_CASE("fit validates its inputs", "[solver]") {
  auto bundle = oracles::random_pd_rbf(8, 2, 99);
  const Eigen::VectorXd y = oracles::random_response(bundle.inputs, 100);

  REQUIRE_THROWS_AS(solver::fit(bundle, Eigen::VectorXd::Zero(5), ExpectileLevel(0.5), 1.0),
                    std::invalid_argument);

  solver::FitOptions bad;
  bad.max_iter = 0;
  REQUIRE_THROWS_AS(solver::fit(bundle, y, ExpectileLevel(0.5), 1.0, nullptr, bad),
                    std::invalid_argument);

  const auto wrong = solver::Coefficients::zero(5);
  REQUIRE_THROWS_AS(solver::fit(bundle, y, ExpectileLevel(0.5), 1.0, &wrong),
                    std::invalid_argument);
}
