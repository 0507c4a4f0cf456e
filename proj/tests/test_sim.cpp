// Tests for the benchmark data generators, their true expectile curves, the
// error metrics, and the end-to-end study driver.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "kere/simulate.hpp"
#include "kere/study.hpp"
#include "oracles.hpp"

using namespace kere;
using Catch::Approx;
using loss::ExpectileLevel;

TEST_CASE("the univariate design follows its published formulas", "[sim]") {
  REQUIRE(sim::sim1_mean(2.0) == Approx(std::sin(1.4) + 0.2));
  REQUIRE(sim::sim1_mean(0.0) == 0.0);
  REQUIRE(sim::sim1_noise_scale(-3.0) == Approx(0.8));
  REQUIRE(sim::sim1_noise_scale(0.0) == Approx(0.2));

  sim::Sim1Spec spec;
  spec.n = 200;
  spec.seed = 31;
  const auto data = sim::sim1_generate(spec);
  REQUIRE(data.X.rows() == 200);
  REQUIRE(data.X.cols() == 1);
  REQUIRE(data.y.size() == 200);
  REQUIRE(data.X.minCoeff() >= -8.0);
  REQUIRE(data.X.maxCoeff() <= 8.0);

  SECTION("identical seeds reproduce the draw") {
    const auto again = sim::sim1_generate(spec);
    REQUIRE((again.X.array() == data.X.array()).all());
    REQUIRE((again.y.array() == data.y.array()).all());
    spec.seed = 32;
    REQUIRE_FALSE((sim::sim1_generate(spec).y.array() == data.y.array()).all());
  }
}

TEST_CASE("error families expose their expectiles", "[sim]") {
  // both built-in families at the symmetric level give the mean
  REQUIRE(sim::error_expectile(sim::Sim1Error::laplace, ExpectileLevel(0.5)) ==
          Approx(0.0).margin(1e-9));
  REQUIRE(sim::error_expectile(sim::Sim1Error::mixed_normal, ExpectileLevel(0.5)) ==
          Approx(0.5).margin(1e-9));
  REQUIRE(sim::error_expectile(sim::Sim2Error::student_t4, ExpectileLevel(0.5)) ==
          Approx(0.0).margin(1e-9));

  SECTION("values agree with Monte Carlo draws from the same family") {
    const auto dist = sim::error_distribution(sim::Sim1Error::mixed_normal);
    const Eigen::VectorXd draws = dist.sample_vector(400000, 99);
    for (double omega : {0.2, 0.8})
      REQUIRE(sim::error_expectile(sim::Sim1Error::mixed_normal, ExpectileLevel(omega)) ==
              Approx(loss::empirical_expectile(draws, ExpectileLevel(omega))).margin(5e-3));
  }

  SECTION("expectiles increase with the level") {
    for (auto family : {sim::Sim1Error::laplace, sim::Sim1Error::mixed_normal}) {
      double prev = sim::error_expectile(family, ExpectileLevel(0.05));
      for (double omega = 0.15; omega < 1.0; omega += 0.1) {
        const double cur = sim::error_expectile(family, ExpectileLevel(omega));
        REQUIRE(cur > prev);
        prev = cur;
      }
    }
  }
}

TEST_CASE("true expectile curves combine mean, scale and error expectile", "[sim]") {
  const ExpectileLevel level(0.8);
  for (auto family : {sim::Sim1Error::laplace, sim::Sim1Error::mixed_normal}) {
    const double b = sim::error_expectile(family, level);
    for (double x : {-6.0, -1.2, 0.0, 3.5, 7.9})
      REQUIRE(sim::sim1_true_expectile(family, x, level) ==
              Approx(sim::sim1_mean(x) + sim::sim1_noise_scale(x) * b).margin(1e-12));
  }

  Eigen::VectorXd xs(3);
  xs << -2.0, 0.5, 4.0;
  const Eigen::VectorXd curve =
      sim::sim1_true_expectile(sim::Sim1Error::laplace, xs, level);
  for (Eigen::Index i = 0; i < 3; ++i)
    REQUIRE(curve[i] == sim::sim1_true_expectile(sim::Sim1Error::laplace, xs[i], level));
}

TEST_CASE("random functions are bounded, structured and reproducible", "[sim]") {
  const auto f = sim::RandomFunction::draw(6, 41);
  REQUIRE(f.terms().size() == 20);
  for (const auto& term : f.terms()) {
    REQUIRE(std::abs(term.weight) <= 1.0);
    REQUIRE_FALSE(term.subset.empty());
    for (auto idx : term.subset) {
      REQUIRE(idx >= 0);
      REQUIRE(idx < 6);
    }
    // curvature matrices are symmetric positive definite by construction
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(term.curvature,
                                                             Eigen::EigenvaluesOnly);
    REQUIRE(eig.eigenvalues().minCoeff() > 0.0);
  }

  const Eigen::MatrixXd X = oracles::random_design(40, 6, 42);
  const Eigen::VectorXd values = f.evaluate_rows(X);
  for (Eigen::Index i = 0; i < 40; ++i) {
    REQUIRE(std::abs(values[i]) <= 20.0);  // 20 bumps with weights in [-1, 1]
    REQUIRE(values[i] == Approx(f(X.row(i))).margin(1e-14));
  }

  const auto same = sim::RandomFunction::draw(6, 41);
  const auto other = sim::RandomFunction::draw(6, 43);
  REQUIRE(same(X.row(0)) == f(X.row(0)));
  REQUIRE(other(X.row(0)) != f(X.row(0)));
}

TEST_CASE("the multivariate spec shares functions across variants", "[sim]") {
  const auto homo = sim::Sim2Spec::make(60, 4, false, sim::Sim2Error::normal, 51);
  const auto het = sim::Sim2Spec::make(60, 4, true, sim::Sim2Error::normal, 51);
  REQUIRE_FALSE(homo.f2.has_value());
  REQUIRE(het.f2.has_value());

  const auto homo_data = sim::sim2_generate(homo);
  const auto het_data = sim::sim2_generate(het);

  // matched seeds reuse the covariate draw; only the noise scale differs
  REQUIRE((homo_data.X.array() == het_data.X.array()).all());
  REQUIRE_FALSE((homo_data.y.array() == het_data.y.array()).all());

  SECTION("resizing keeps the drawn functions") {
    const auto test_spec = homo.resized(25, 99);
    REQUIRE(test_spec.n == 25);
    REQUIRE(test_spec.p == 4);
    Eigen::VectorXd probe = Eigen::VectorXd::Constant(4, 0.3);
    REQUIRE(test_spec.f1(probe) == homo.f1(probe));
  }

  SECTION("generation is reproducible") {
    const auto again = sim::sim2_generate(het);
    REQUIRE((again.y.array() == het_data.y.array()).all());
  }
}

TEST_CASE("multivariate noise matches its specification", "[sim]") {
  auto spec = sim::Sim2Spec::make(100000, 3, false, sim::Sim2Error::normal, 61);
  const auto data = sim::sim2_generate(spec);
  const Eigen::VectorXd signal = spec.f1.evaluate_rows(data.X);
  const Eigen::VectorXd resid = data.y - signal;
  const double var = (resid.array() - resid.mean()).square().sum() / (resid.size() - 1);
  REQUIRE(var == Approx(1.0).epsilon(0.05));

  SECTION("the heteroscedastic variant scales by the second function") {
    auto het = sim::Sim2Spec::make(100000, 3, true, sim::Sim2Error::normal, 61);
    const auto hdata = sim::sim2_generate(het);
    const Eigen::VectorXd hsignal = het.f1.evaluate_rows(hdata.X);
    const Eigen::VectorXd scale = het.f2->evaluate_rows(hdata.X).cwiseAbs();
    const Eigen::VectorXd scaled =
        (hdata.y - hsignal).array() / scale.array().max(1e-12);
    const double hvar =
        (scaled.array() - scaled.mean()).square().sum() / (scaled.size() - 1);
    REQUIRE(hvar == Approx(1.0).epsilon(0.05));
  }

  SECTION("true expectile surfaces use the same decomposition") {
    auto small = sim::Sim2Spec::make(5, 3, true, sim::Sim2Error::normal, 62);
    const auto sdata = sim::sim2_generate(small);
    const ExpectileLevel level(0.9);
    const double b = sim::error_expectile(sim::Sim2Error::normal, level);
    const Eigen::VectorXd truth = sim::sim2_true_expectile(small, sdata.X, level);
    for (Eigen::Index i = 0; i < 5; ++i) {
      const double expected = small.f1(sdata.X.row(i)) +
                              std::abs((*small.f2)(sdata.X.row(i))) * b;
      REQUIRE(truth[i] == Approx(expected).margin(1e-12));
    }
  }
}

TEST_CASE("error metrics have their textbook values", "[sim]") {
  Eigen::VectorXd a(2), b(2);
  a << 1.0, 2.0;
  b << 0.0, 4.0;
  REQUIRE(sim::mad(a, b) == Approx(1.5));  // (1 + 2) / 2
  REQUIRE(sim::mad(a, a) == 0.0);
  REQUIRE(sim::mad(a, b) == sim::mad(b, a));

  Eigen::VectorXd y(2), fitted(2);
  y << 1.0, 0.0;
  fitted << 0.0, 1.0;  // residuals +1 and -1
  REQUIRE(sim::prediction_error(y, y, ExpectileLevel(0.4)) == 0.0);
  // (0.6 * 1 + 0.4 * 1) / 2 at level 0.6
  REQUIRE(sim::prediction_error(y, fitted, ExpectileLevel(0.6)) == Approx(0.5));
  // the symmetric level is half the mean squared error
  REQUIRE(sim::prediction_error(y, fitted, ExpectileLevel(0.5)) == Approx(0.5));

  // doubling every residual quadruples the quadratic loss
  REQUIRE(sim::prediction_error(2.0 * y, 2.0 * fitted, ExpectileLevel(0.3)) ==
          Approx(4.0 * sim::prediction_error(y, fitted, ExpectileLevel(0.3))).margin(1e-12));
}

TEST_CASE("study runs are deterministic and well shaped", "[sim][study]") {
  sim::Sim1Study study;
  study.error = sim::Sim1Error::mixed_normal;
  study.omegas = {0.2, 0.5};
  study.n_train = 50;
  study.n_test = 80;
  study.replications = 2;
  study.seed = 77;
  study.tuning.folds = 3;
  study.tuning.num_lambdas = 5;
  study.tuning.sigma2_factors = {0.5, 1.0};

  const auto result = sim::run_study(study);
  REQUIRE(result.omegas == study.omegas);
  REQUIRE(result.mad_values.rows() == 2);
  REQUIRE(result.mad_values.cols() == 2);
  REQUIRE(result.pred_errors.rows() == 2);
  REQUIRE(result.rep_seconds.minCoeff() > 0.0);
  REQUIRE(result.rep_seeds.size() == 2);
  REQUIRE(result.mad_values.minCoeff() > 0.0);
  REQUIRE(result.mad_values.allFinite());

  // the summaries aggregate the raw matrix
  REQUIRE(result.mad_mean()[0] == Approx(result.mad_values.col(0).mean()).margin(1e-15));
  REQUIRE(result.pred_error_mean()[1] ==
          Approx(result.pred_errors.col(1).mean()).margin(1e-15));

  SECTION("a second run reproduces the numbers bit for bit") {
    const auto again = sim::run_study(study);
    REQUIRE((again.mad_values.array() == result.mad_values.array()).all());
    REQUIRE((again.pred_errors.array() == result.pred_errors.array()).all());
    REQUIRE(again.rep_seeds == result.rep_seeds);
  }

  SECTION("curves evaluate the fitted and true surfaces on a grid") {
    const auto curves = sim::sim1_curves(study, 41);
    REQUIRE(curves.x.size() == 41);
    REQUIRE(curves.predicted.rows() == 41);
    REQUIRE(curves.predicted.cols() == 2);
    REQUIRE(curves.truth.cols() == 2);
    for (Eigen::Index i = 1; i < 41; ++i) REQUIRE(curves.x[i] > curves.x[i - 1]);
    // the truth column is the analytic expectile curve
    for (Eigen::Index i = 0; i < 41; ++i)
      REQUIRE(curves.truth(i, 0) ==
              Approx(sim::sim1_true_expectile(study.error, curves.x[i],
                                              ExpectileLevel(0.2)))
                  .margin(1e-12));
  }
}

TEST_CASE("the multivariate study driver runs end to end", "[sim][study]") {
  sim::Sim2Study study;
  study.error = sim::Sim2Error::normal;
  study.heteroscedastic = true;
  study.omegas = {0.5};
  study.n_train = 60;
  study.n_test = 100;
  study.p = 4;
  study.replications = 1;
  study.seed = 88;
  study.tuning.folds = 3;
  study.tuning.num_lambdas = 5;
  study.tuning.sigma2_factors = {1.0};

  const auto result = sim::run_study(study);
  REQUIRE(result.mad_values.rows() == 1);
  REQUIRE(result.mad_values.cols() == 1);
  REQUIRE(result.mad_values(0, 0) > 0.0);
  REQUIRE(result.mad_values.allFinite());

  const auto again = sim::run_study(study);
  REQUIRE(again.mad_values(0, 0) == result.mad_values(0, 0));
}
