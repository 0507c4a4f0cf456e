#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "cli_io.hpp"
#include "kere/cross_validation.hpp"
#include "kere/dataset.hpp"
#include "kere/kernel.hpp"
#include "kere/loss.hpp"
#include "kere/model_io.hpp"
#include "kere/path.hpp"
#include "kere/random.hpp"
#include "kere/simulate.hpp"
#include "kere/solver.hpp"
#include "kere/study.hpp"
#include "kere/version.hpp"

namespace {

using namespace kere;
using nlohmann::json;

// ---------------------------------------------------------------------------
// shared flag bundles
// ---------------------------------------------------------------------------

struct DataArgs {
  std::string path;
  std::string response;
};

struct KernelArgs {
  std::string family = "rbf";
  double sigma2 = -1.0;
  double kappa = 1.0;
  double theta = 0.0;
  int degree = 2;
};

struct SolveArgs {
  double tol = -1.0;
  int max_iter = 100;
};

void add_data_flags(CLI::App& cmd, DataArgs& a) {
  cmd.add_option("--data", a.path, "input CSV with a header row")->required();
  cmd.add_option("--response", a.response,
                 "response column name or zero-based index (default: last column)");
}

void add_kernel_flags(CLI::App& cmd, KernelArgs& k) {
  cmd.add_option("--kernel", k.family, "kernel family")
      ->check(CLI::IsMember({"rbf", "poly", "sigmoid", "linear"}))
      ->capture_default_str();
  cmd.add_option("--sigma2", k.sigma2,
                 "rbf bandwidth; nonpositive selects the median pairwise squared distance");
  cmd.add_option("--kappa", k.kappa, "sigmoid slope")->capture_default_str();
  cmd.add_option("--theta", k.theta, "sigmoid / polynomial offset")->capture_default_str();
  cmd.add_option("--degree", k.degree, "polynomial degree")->capture_default_str();
}

void add_solve_flags(CLI::App& cmd, SolveArgs& s) {
  cmd.add_option("--tol", s.tol,
                 "absolute step tolerance; nonpositive selects the scaled default");
  cmd.add_option("--max-iter", s.max_iter, "iteration cap per fit")->capture_default_str();
}

// ---------------------------------------------------------------------------
// input preparation
// ---------------------------------------------------------------------------

/// Applies the default of the --response flag: the last column of the file.
std::string resolve_response(const std::string& path, const std::string& flag) {
  if (!flag.empty()) return flag;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error(path + ": empty file");
  const auto commas = std::count(header.begin(), header.end(), ',');
  return std::to_string(commas);  // zero-based index of the last column
}

kernel::KernelSpec resolve_spec(const KernelArgs& k, const Eigen::MatrixXd& X) {
  switch (kernel::family_from_name(k.family)) {
    case kernel::KernelFamily::rbf: {
      double sigma2 = k.sigma2;
      if (sigma2 <= 0.0) sigma2 = kernel::median_pairwise_sq_dist(X);
      if (sigma2 <= 0.0)
        throw std::runtime_error(
            "median pairwise distance is zero; pass --sigma2 explicitly");
      return kernel::KernelSpec::rbf(sigma2);
    }
    case kernel::KernelFamily::sigmoid:
      return kernel::KernelSpec::sigmoid(k.kappa, k.theta);
    case kernel::KernelFamily::polynomial:
      return kernel::KernelSpec::polynomial(k.degree, k.theta);
    case kernel::KernelFamily::linear:
      return kernel::KernelSpec::linear();
  }
  throw std::logic_error("unreachable kernel family");
}

struct Prepared {
  io::Dataset data;
  kernel::Standardizer transform;
  Eigen::MatrixXd features;  ///< transformed rows, what the kernel sees
  kernel::KernelSpec spec;
  std::string standardize;  ///< "on" or "off" after applying the family default
};

/// Empty --standardize selects the family default: on for rbf, off otherwise.
std::string resolve_standardize(const std::string& flag, const std::string& family) {
  if (!flag.empty()) return flag;
  return family == "rbf" ? "on" : "off";
}

Prepared prepare_features(const DataArgs& d, const KernelArgs& k,
                          const std::string& standardize) {
  Prepared out;
  out.data = io::load_csv(d.path, resolve_response(d.path, d.response));
  out.standardize = resolve_standardize(standardize, k.family);
  out.transform = out.standardize == "on"
                      ? kernel::Standardizer::fit(out.data.X)
                      : kernel::Standardizer::identity(out.data.X.cols());
  out.features = out.transform.apply(out.data.X);
  out.spec = resolve_spec(k, out.features);
  return out;
}

void warn_if_clamped(const kernel::GramBundle& bundle) {
  if (bundle.clamped_indefinite)
    std::fprintf(stderr,
                 "warning: kernel matrix is indefinite; negative eigenvalues were "
                 "clamped to zero\n");
}

/// Resolved kernel settings as they enter the sidecars.
json kernel_flag_json(const kernel::KernelSpec& spec) {
  return json{{"kernel", kernel::family_name(spec.family)},
              {"sigma2", spec.sigma2},
              {"kappa", spec.kappa},
              {"theta", spec.theta},
              {"degree", spec.degree}};
}

void warn_not_converged(int iterations) {
  std::fprintf(stderr,
               "warning: stopped after %d iterations without meeting the tolerance; "
               "results are still written\n",
               iterations);
}

double seconds_between(std::chrono::steady_clock::time_point a,
                       std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitCmd {
  DataArgs data;
  KernelArgs kernel;
  SolveArgs solve;
  double omega = 0.5;
  double lambda = 1.0;
  std::string standardize;
  bool rate_bound = false;
  std::uint64_t seed = 0;
  std::string out;
};

void run_fit(const FitCmd& a) {
  const loss::ExpectileLevel level(a.omega);
  Prepared prep = prepare_features(a.data, a.kernel, a.standardize);
  kernel::GramBundle bundle = kernel::gram_matrix(prep.spec, prep.features);
  kernel::eigendecompose(bundle);
  warn_if_clamped(bundle);

  solver::FitOptions options;
  options.tol = a.solve.tol;
  options.max_iter = a.solve.max_iter;
  options.compute_rate_bound = a.rate_bound;
  options.record_contractions = false;
  const solver::FitResult res =
      solver::fit(bundle, prep.data.y, level, a.lambda, nullptr, options);
  if (!res.diag.converged) warn_not_converged(res.diag.iterations);

  json flags{{"data", a.data.path},          {"response", prep.data.response_name},
             {"omega", a.omega},             {"lambda", a.lambda},
             {"tol", a.solve.tol},           {"max-iter", a.solve.max_iter},
             {"standardize", prep.standardize}, {"rate-bound", a.rate_bound},
             {"out", a.out}};
  flags.update(kernel_flag_json(prep.spec));

  io::Model model;
  model.omega = a.omega;
  model.lambda = a.lambda;
  model.spec = prep.spec;
  model.standardizer = prep.transform;
  model.inputs = prep.features;
  model.coef = res.coef;
  model.iterations = res.diag.iterations;
  model.converged = res.diag.converged;
  model.objective = res.diag.objective;
  model.certificate = res.diag.certificate;
  model.rate_bound = res.diag.rate_bound;
  model.provenance = cli::provenance_strings("fit", a.seed, flags);
  io::save_model(model, a.out);

  std::cout << "fit: n=" << prep.data.X.rows() << " p=" << prep.data.X.cols()
            << " iterations=" << res.diag.iterations
            << " converged=" << (res.diag.converged ? "yes" : "no")
            << " objective=" << res.diag.objective
            << " certificate=" << res.diag.certificate << " -> " << a.out << '\n';
}

// ---------------------------------------------------------------------------
// path
// ---------------------------------------------------------------------------

struct PathCmd {
  DataArgs data;
  KernelArgs kernel;
  SolveArgs solve;
  double omega = 0.5;
  double lambda_max = -1.0;
  double lambda_min = -1.0;
  int nlambda = 100;
  std::string standardize;
  bool rate_bound = false;
  std::uint64_t seed = 0;
  std::string out;
};

void run_path(const PathCmd& a) {
  const loss::ExpectileLevel level(a.omega);
  Prepared prep = prepare_features(a.data, a.kernel, a.standardize);
  kernel::GramBundle bundle = kernel::gram_matrix(prep.spec, prep.features);
  kernel::eigendecompose(bundle);
  warn_if_clamped(bundle);

  path::PathConfig config;
  config.lambda_max = a.lambda_max;
  config.lambda_min = a.lambda_min;
  config.num_lambdas = a.nlambda;
  config.fit.tol = a.solve.tol;
  config.fit.max_iter = a.solve.max_iter;
  config.fit.record_contractions = false;
  config.compute_rate_bound = a.rate_bound;
  const path::PathResult res = path::fit_path(bundle, prep.data.y, level, config);

  int stalled = 0;
  for (const auto& diag : res.diagnostics)
    if (!diag.converged) ++stalled;
  if (stalled > 0)
    std::fprintf(stderr,
                 "warning: %d of %d grid points stopped at the iteration cap\n",
                 stalled, a.nlambda);

  cli::CsvTable csv({"lambda", "alpha0", "objective", "iterations", "converged",
                     "certificate", "rate_bound"});
  for (Eigen::Index i = 0; i < res.lambdas.size(); ++i) {
    const auto& diag = res.diagnostics[static_cast<std::size_t>(i)];
    csv.cell(res.lambdas[i])
        .cell(res.coefficients[static_cast<std::size_t>(i)].intercept)
        .cell(diag.objective)
        .cell(diag.iterations)
        .cell(diag.converged ? 1 : 0)
        .cell(diag.certificate)
        .cell(diag.rate_bound ? *diag.rate_bound
                              : std::numeric_limits<double>::quiet_NaN());
    csv.end_row();
  }
  cli::write_text_file(a.out, csv.str());

  json flags{{"data", a.data.path},
             {"response", prep.data.response_name},
             {"omega", a.omega},
             {"lambda-max", res.lambdas[0]},
             {"lambda-min", res.lambdas[res.lambdas.size() - 1]},
             {"nlambda", a.nlambda},
             {"tol", a.solve.tol},
             {"max-iter", a.solve.max_iter},
             {"standardize", prep.standardize},
             {"rate-bound", a.rate_bound},
             {"out", a.out}};
  flags.update(kernel_flag_json(prep.spec));
  json meta = cli::provenance_json("path", a.seed, flags);
  meta["outputs"] = {{"primary", json::array({a.out})}, {"secondary", json::array()}};
  cli::write_text_file(a.out + ".meta.json", meta.dump(2) + "\n");

  std::cout << "path: n=" << prep.data.X.rows() << " grid=" << a.nlambda
            << " lambda=[" << res.lambdas[res.lambdas.size() - 1] << ", "
            << res.lambdas[0] << "]"
            << " converged=" << (res.all_converged ? "all" : "partial") << " -> "
            << a.out << '\n';
}

// ---------------------------------------------------------------------------
// cv
// ---------------------------------------------------------------------------

struct CvCmd {
  DataArgs data;
  KernelArgs kernel;
  SolveArgs solve;
  double omega = 0.5;
  int folds = 5;
  std::vector<double> sigma2_grid;
  double lambda_max = -1.0;
  double lambda_min = -1.0;
  int nlambda = 50;
  std::string standardize;
  std::uint64_t seed = 0;
  std::string out;
};

/** Penalty-only grid search used for the kernels without a bandwidth: one
 *  shared lambda grid, k-fold held-out loss, ties to the larger penalty. */
select::CVResult fixed_kernel_cv(const kernel::KernelSpec& spec, const Eigen::MatrixXd& X,
                                 const Eigen::VectorXd& y, loss::ExpectileLevel level,
                                 const select::CVConfig& config) {
  select::CVResult out;
  out.sigma2_grid = {spec.sigma2};
  out.fold_assignment = select::kfold_split(X.rows(), config.folds, config.seed);

  path::PathConfig pc = config.path;
  if (pc.lambda_max <= 0.0) {
    std::vector<kernel::GramBundle> bundles;
    bundles.push_back(kernel::gram_matrix(spec, X));
    pc.lambda_max = select::resolve_lambda_max(bundles, y, {level});
  }
  if (pc.lambda_min <= 0.0) pc.lambda_min = 1e-4 * pc.lambda_max;

  Eigen::MatrixXd fold_loss(config.folds, pc.num_lambdas);
  for (int fold = 0; fold < config.folds; ++fold) {
    const select::FoldFit fit =
        select::fit_fold(spec, X, y, out.fold_assignment, fold, level, pc);
    fold_loss.row(fold) = fit.held_out_loss.transpose();
    if (fold == 0) out.lambdas = fit.path.lambdas;
  }

  out.mean_loss.resize(1, pc.num_lambdas);
  out.se_loss.resize(1, pc.num_lambdas);
  out.mean_loss.row(0) = fold_loss.colwise().mean();
  for (int j = 0; j < pc.num_lambdas; ++j) {
    const double var = (fold_loss.col(j).array() - out.mean_loss(0, j)).square().sum() /
                       (config.folds - 1);
    out.se_loss(0, j) = std::sqrt(var / config.folds);
  }
  for (int j = 1; j < pc.num_lambdas; ++j)  // descending grid: first win = larger lambda
    if (out.mean_loss(0, j) < out.mean_loss(0, out.best_lambda_index))
      out.best_lambda_index = j;
  out.best_sigma2 = spec.sigma2;
  out.best_lambda = out.lambdas[out.best_lambda_index];
  return out;
}

void run_cv(const CvCmd& a) {
  const loss::ExpectileLevel level(a.omega);
  Prepared prep = prepare_features(a.data, a.kernel, a.standardize);

  select::CVConfig config;
  config.folds = a.folds;
  config.sigma2_grid = a.sigma2_grid;
  config.path.lambda_max = a.lambda_max;
  config.path.lambda_min = a.lambda_min;
  config.path.num_lambdas = a.nlambda;
  config.path.fit.tol = a.solve.tol;
  config.path.fit.max_iter = a.solve.max_iter;
  config.path.fit.record_contractions = false;
  config.seed = a.seed;

  const bool is_rbf = prep.spec.family == kernel::KernelFamily::rbf;
  const select::CVResult res =
      is_rbf ? select::cross_validate(prep.features, prep.data.y, level, config)
             : fixed_kernel_cv(prep.spec, prep.features, prep.data.y, level, config);

  cli::CsvTable csv({"sigma2", "lambda", "mean_loss", "se_loss"});
  for (std::size_t s = 0; s < res.sigma2_grid.size(); ++s)
    for (Eigen::Index j = 0; j < res.lambdas.size(); ++j) {
      csv.cell(res.sigma2_grid[s])
          .cell(res.lambdas[j])
          .cell(res.mean_loss(static_cast<Eigen::Index>(s), j))
          .cell(res.se_loss(static_cast<Eigen::Index>(s), j));
      csv.end_row();
    }
  cli::write_text_file(a.out, csv.str());

  json flags{{"data", a.data.path},
             {"response", prep.data.response_name},
             {"omega", a.omega},
             {"folds", a.folds},
             {"sigma2-grid", res.sigma2_grid},
             {"lambda-max", res.lambdas[0]},
             {"lambda-min", res.lambdas[res.lambdas.size() - 1]},
             {"nlambda", a.nlambda},
             {"tol", a.solve.tol},
             {"max-iter", a.solve.max_iter},
             {"standardize", prep.standardize},
             {"out", a.out}};
  flags.update(kernel_flag_json(prep.spec));

  json best = cli::provenance_json("cv", a.seed, flags);
  best["best"] = {{"sigma2", res.best_sigma2},
                  {"lambda", res.best_lambda},
                  {"sigma2_index", res.best_sigma2_index},
                  {"lambda_index", res.best_lambda_index},
                  {"mean_loss", res.mean_loss(res.best_sigma2_index, res.best_lambda_index)},
                  {"se_loss", res.se_loss(res.best_sigma2_index, res.best_lambda_index)}};
  best["outputs"] = {{"primary", json::array({a.out, a.out + ".best.json"})},
                     {"secondary", json::array()}};
  cli::write_text_file(a.out + ".best.json", best.dump(2) + "\n");

  std::cout << "cv: folds=" << a.folds << " grid=" << res.sigma2_grid.size() << "x"
            << res.lambdas.size() << " best sigma2=" << res.best_sigma2
            << " lambda=" << res.best_lambda
            << " mean_loss=" << res.mean_loss(res.best_sigma2_index, res.best_lambda_index)
            << " -> " << a.out << '\n';
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictCmd {
  std::string model;
  std::string data;
  std::string response;
  std::uint64_t seed = 0;
  std::string out;
};

void run_predict(const PredictCmd& a) {
  const io::Model model = io::load_model(a.model);
  const std::optional<std::string> drop =
      a.response.empty() ? std::nullopt : std::optional<std::string>(a.response);
  const io::FeatureTable table = io::load_feature_csv(a.data, drop);
  const Eigen::VectorXd pred = io::predict(model, table.X);

  cli::CsvTable csv({"row", "prediction"});
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    csv.cell(static_cast<std::int64_t>(i)).cell(pred[i]);
    csv.end_row();
  }
  cli::write_text_file(a.out, csv.str());

  const json flags{{"model", a.model},
                   {"data", a.data},
                   {"response", a.response},
                   {"out", a.out}};
  json meta = cli::provenance_json("predict", a.seed, flags);
  meta["outputs"] = {{"primary", json::array({a.out})}, {"secondary", json::array()}};
  cli::write_text_file(a.out + ".meta.json", meta.dump(2) + "\n");

  std::cout << "predict: n=" << pred.size() << " -> " << a.out << '\n';
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

sim::Sim1Error sim1_error_from(const std::string& name) {
  if (name == "laplace") return sim::Sim1Error::laplace;
  if (name == "mixed") return sim::Sim1Error::mixed_normal;
  throw std::invalid_argument("unknown error family: " + name);
}

std::string sim1_error_label(sim::Sim1Error error) {
  return error == sim::Sim1Error::laplace ? "laplace" : "mixed";
}

sim::Sim2Error sim2_error_from(const std::string& name) {
  if (name == "normal") return sim::Sim2Error::normal;
  if (name == "t4") return sim::Sim2Error::student_t4;
  if (name == "mixed") return sim::Sim2Error::mixed_normal;
  throw std::invalid_argument("unknown error family: " + name);
}

std::string sim2_error_label(sim::Sim2Error error) {
  switch (error) {
    case sim::Sim2Error::normal: return "normal";
    case sim::Sim2Error::student_t4: return "t4";
    case sim::Sim2Error::mixed_normal: return "mixed";
  }
  throw std::logic_error("unreachable error family");
}

std::string dataset_csv(const sim::SimData& data) {
  std::vector<std::string> header;
  if (data.X.cols() == 1) {
    header.emplace_back("x");
  } else {
    for (Eigen::Index j = 0; j < data.X.cols(); ++j)
      header.push_back("x" + std::to_string(j + 1));
  }
  header.emplace_back("y");
  cli::CsvTable csv(header);
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) csv.cell(data.X(i, j));
    csv.cell(data.y[i]);
    csv.end_row();
  }
  return csv.str();
}

struct SimulateCmd {
  Eigen::Index n = 0;  // set per subcommand default
  int p = 10;
  std::string error;
  bool het = false;
  std::uint64_t seed = 1;
  std::string out;
};

void run_simulate_sim1(const SimulateCmd& a) {
  sim::Sim1Spec spec;
  spec.n = a.n;
  spec.error = sim1_error_from(a.error);
  spec.seed = a.seed;
  cli::write_text_file(a.out, dataset_csv(sim::sim1_generate(spec)));

  const json flags{{"n", a.n}, {"error", a.error}, {"out", a.out}};
  json meta = cli::provenance_json("simulate sim1", a.seed, flags);
  meta["generator"] = {{"design", "sim1"},
                       {"mean", "sin(0.7 x) + x^2 / 20"},
                       {"noise_scale", "(|x| + 1) / 5"},
                       {"x", "uniform on [-8, 8]"}};
  meta["outputs"] = {{"primary", json::array({a.out})}, {"secondary", json::array()}};
  cli::write_text_file(a.out + ".meta.json", meta.dump(2) + "\n");

  std::cout << "simulate sim1: n=" << a.n << " error=" << a.error << " seed=" << a.seed
            << " -> " << a.out << '\n';
}

void run_simulate_sim2(const SimulateCmd& a) {
  const sim::Sim2Spec spec =
      sim::Sim2Spec::make(a.n, a.p, a.het, sim2_error_from(a.error), a.seed);
  cli::write_text_file(a.out, dataset_csv(sim::sim2_generate(spec)));

  const json flags{{"n", a.n},     {"p", a.p},     {"error", a.error},
                   {"het", a.het}, {"out", a.out}};
  json meta = cli::provenance_json("simulate sim2", a.seed, flags);
  meta["generator"] = {{"design", "sim2"},
                      {"mean", "random function f1"},
                      {"noise_scale", a.het ? "|f2| for a random function f2" : "1"},
                      {"x", "standard normal in R^p"}};
  meta["outputs"] = {{"primary", json::array({a.out})}, {"secondary", json::array()}};
  cli::write_text_file(a.out + ".meta.json", meta.dump(2) + "\n");

  std::cout << "simulate sim2: n=" << a.n << " p=" << a.p << " error=" << a.error
            << " het=" << (a.het ? "yes" : "no") << " seed=" << a.seed << " -> " << a.out
            << '\n';
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchSim1Cmd {
  int reps = 20;
  std::vector<double> omegas = {0.05, 0.2, 0.5, 0.8, 0.95};
  Eigen::Index n = 400;
  Eigen::Index test_n = 2000;
  std::string error = "both";
  int folds = 5;
  int nlambda = 50;
  bool curves = false;
  std::uint64_t seed = 1;
  std::string out;
};

void run_bench_sim1(const BenchSim1Cmd& a) {
  std::vector<sim::Sim1Error> errors;
  if (a.error == "both")
    errors = {sim::Sim1Error::laplace, sim::Sim1Error::mixed_normal};
  else
    errors = {sim1_error_from(a.error)};

  cli::CsvTable mad_csv({"error", "omega", "mad_mean", "mad_se", "pred_error_mean"});
  cli::CsvTable timing_csv({"error", "rep", "seconds"});
  json primary = json::array({a.out + "_mad.csv"});

  for (const sim::Sim1Error error : errors) {
    sim::Sim1Study study;
    study.error = error;
    study.omegas = a.omegas;
    study.n_train = a.n;
    study.n_test = a.test_n;
    study.replications = a.reps;
    study.seed = a.seed;
    study.tuning.folds = a.folds;
    study.tuning.num_lambdas = a.nlambda;

    const std::string label = sim1_error_label(error);
    const sim::StudyResult res = sim::run_study(study);
    const Eigen::VectorXd mad_mean = res.mad_mean();
    const Eigen::VectorXd mad_se = res.mad_se();
    const Eigen::VectorXd pe_mean = res.pred_error_mean();
    for (std::size_t j = 0; j < res.omegas.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      mad_csv.cell(label).cell(res.omegas[j]).cell(mad_mean[jj]).cell(mad_se[jj]).cell(
          pe_mean[jj]);
      mad_csv.end_row();
      std::cout << "bench sim1: error=" << label << " omega=" << res.omegas[j]
                << " mad=" << mad_mean[jj] << " (se " << mad_se[jj] << ")\n";
    }
    for (Eigen::Index r = 0; r < res.rep_seconds.size(); ++r) {
      timing_csv.cell(label).cell(static_cast<std::int64_t>(r)).cell(res.rep_seconds[r]);
      timing_csv.end_row();
    }

    if (a.curves) {
      const sim::Sim1Curves curve = sim::sim1_curves(study);
      cli::CsvTable curve_csv({"x", "level", "predicted", "true"});
      for (std::size_t j = 0; j < curve.omegas.size(); ++j)
        for (Eigen::Index i = 0; i < curve.x.size(); ++i) {
          const auto jj = static_cast<Eigen::Index>(j);
          curve_csv.cell(curve.x[i])
              .cell(curve.omegas[j])
              .cell(curve.predicted(i, jj))
              .cell(curve.truth(i, jj));
          curve_csv.end_row();
        }
      const std::string curve_path = a.out + "_curves_" + label + ".csv";
      cli::write_text_file(curve_path, curve_csv.str());
      primary.push_back(curve_path);
    }
  }

  cli::write_text_file(a.out + "_mad.csv", mad_csv.str());
  cli::write_text_file(a.out + "_timing.csv", timing_csv.str());

  const json flags{{"reps", a.reps},     {"omegas", a.omegas}, {"n", a.n},
                   {"test-n", a.test_n}, {"error", a.error},   {"folds", a.folds},
                   {"nlambda", a.nlambda}, {"curves", a.curves}, {"out", a.out}};
  json meta = cli::provenance_json("bench sim1", a.seed, flags);
  meta["outputs"] = {{"primary", primary},
                     {"secondary", json::array({a.out + "_timing.csv"})}};
  cli::write_text_file(a.out + "_meta.json", meta.dump(2) + "\n");

  std::cout << "bench sim1: wrote " << a.out << "_mad.csv and sidecars\n";
}

struct BenchSim2Cmd {
  int reps = 10;
  std::vector<double> omegas = {0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95};
  Eigen::Index n = 300;
  Eigen::Index test_n = 1200;
  int p = 10;
  std::string error = "all";
  std::string variance = "both";
  int folds = 5;
  int nlambda = 50;
  std::uint64_t seed = 1;
  std::string out;
};

void run_bench_sim2(const BenchSim2Cmd& a) {
  std::vector<sim::Sim2Error> errors;
  if (a.error == "all")
    errors = {sim::Sim2Error::normal, sim::Sim2Error::student_t4,
              sim::Sim2Error::mixed_normal};
  else
    errors = {sim2_error_from(a.error)};
  std::vector<bool> variants;
  if (a.variance == "both")
    variants = {false, true};
  else if (a.variance == "homo")
    variants = {false};
  else
    variants = {true};

  cli::CsvTable mad_csv(
      {"error", "variance", "omega", "mad_mean", "mad_se", "pred_error_mean"});
  cli::CsvTable timing_csv({"error", "variance", "rep", "seconds"});

  for (const sim::Sim2Error error : errors)
    for (const bool het : variants) {
      sim::Sim2Study study;
      study.error = error;
      study.heteroscedastic = het;
      study.omegas = a.omegas;
      study.n_train = a.n;
      study.n_test = a.test_n;
      study.p = a.p;
      study.replications = a.reps;
      study.seed = a.seed;  // shared master seed: homo and het see matched draws
      study.tuning.folds = a.folds;
      study.tuning.num_lambdas = a.nlambda;

      const std::string label = sim2_error_label(error);
      const std::string variant = het ? "het" : "homo";
      const sim::StudyResult res = sim::run_study(study);
      const Eigen::VectorXd mad_mean = res.mad_mean();
      const Eigen::VectorXd mad_se = res.mad_se();
      const Eigen::VectorXd pe_mean = res.pred_error_mean();
      for (std::size_t j = 0; j < res.omegas.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        mad_csv.cell(label).cell(variant).cell(res.omegas[j]).cell(mad_mean[jj]).cell(
            mad_se[jj]).cell(pe_mean[jj]);
        mad_csv.end_row();
        std::cout << "bench sim2: error=" << label << " variance=" << variant
                  << " omega=" << res.omegas[j] << " mad=" << mad_mean[jj] << " (se "
                  << mad_se[jj] << ")\n";
      }
      for (Eigen::Index r = 0; r < res.rep_seconds.size(); ++r) {
        timing_csv.cell(label).cell(variant).cell(static_cast<std::int64_t>(r)).cell(
            res.rep_seconds[r]);
        timing_csv.end_row();
      }
    }

  cli::write_text_file(a.out + "_mad.csv", mad_csv.str());
  cli::write_text_file(a.out + "_timing.csv", timing_csv.str());

  const json flags{{"reps", a.reps},       {"omegas", a.omegas},
                   {"n", a.n},             {"test-n", a.test_n},
                   {"p", a.p},             {"error", a.error},
                   {"variance", a.variance}, {"folds", a.folds},
                   {"nlambda", a.nlambda}, {"out", a.out}};
  json meta = cli::provenance_json("bench sim2", a.seed, flags);
  meta["outputs"] = {{"primary", json::array({a.out + "_mad.csv"})},
                     {"secondary", json::array({a.out + "_timing.csv"})}};
  cli::write_text_file(a.out + "_meta.json", meta.dump(2) + "\n");

  std::cout << "bench sim2: wrote " << a.out << "_mad.csv and sidecars\n";
}

struct BenchScalingCmd {
  std::vector<Eigen::Index> sizes = {100, 200, 400, 800};
  int reps = 3;
  double omega = 0.05;
  std::string error = "mixed";
  int nlambda = 20;
  std::uint64_t seed = 1;
  std::string out;
};

void run_bench_scaling(const BenchScalingCmd& a) {
  const loss::ExpectileLevel level(a.omega);
  cli::CsvTable csv({"n", "rep", "gram_seconds", "eigen_seconds", "path_seconds",
                     "iterations_total"});
  std::uint64_t tag = 1000;
  for (const Eigen::Index n : a.sizes) {
    double mean_path = 0.0;
    for (int rep = 0; rep < a.reps; ++rep, ++tag) {
      sim::Sim1Spec spec;
      spec.n = n;
      spec.error = sim1_error_from(a.error);
      spec.seed = UniformStream::derive_seed(a.seed, tag);
      const sim::SimData data = sim::sim1_generate(spec);
      const kernel::Standardizer transform = kernel::Standardizer::fit(data.X);
      const Eigen::MatrixXd features = transform.apply(data.X);
      const kernel::KernelSpec kspec =
          kernel::KernelSpec::rbf(kernel::median_pairwise_sq_dist(features));

      const auto t0 = std::chrono::steady_clock::now();
      kernel::GramBundle bundle = kernel::gram_matrix(kspec, features);
      const auto t1 = std::chrono::steady_clock::now();
      kernel::eigendecompose(bundle);
      const auto t2 = std::chrono::steady_clock::now();
      path::PathConfig config;
      config.num_lambdas = a.nlambda;
      config.fit.record_contractions = false;
      const path::PathResult res = path::fit_path(bundle, data.y, level, config);
      const auto t3 = std::chrono::steady_clock::now();

      std::int64_t iterations = 0;
      for (const auto& diag : res.diagnostics) iterations += diag.iterations;
      csv.cell(static_cast<std::int64_t>(n))
          .cell(rep)
          .cell(seconds_between(t0, t1))
          .cell(seconds_between(t1, t2))
          .cell(seconds_between(t2, t3))
          .cell(iterations);
      csv.end_row();
      mean_path += seconds_between(t2, t3) / a.reps;
    }
    std::cout << "bench scaling: n=" << n << " mean path seconds=" << mean_path << '\n';
  }
  cli::write_text_file(a.out + "_scaling.csv", csv.str());

  json sizes = json::array();
  for (const Eigen::Index n : a.sizes) sizes.push_back(n);
  const json flags{{"sizes", sizes},       {"reps", a.reps},
                   {"omega", a.omega},     {"error", a.error},
                   {"nlambda", a.nlambda}, {"out", a.out}};
  json meta = cli::provenance_json("bench scaling", a.seed, flags);
  meta["outputs"] = {{"primary", json::array()},
                     {"secondary", json::array({a.out + "_scaling.csv"})}};
  cli::write_text_file(a.out + "_meta.json", meta.dump(2) + "\n");

  std::cout << "bench scaling: wrote " << a.out << "_scaling.csv\n";
}

// ---------------------------------------------------------------------------
// wiring
// ---------------------------------------------------------------------------

std::string active_command(const CLI::App& app) {
  std::string name;
  const CLI::App* current = &app;
  while (!current->get_subcommands().empty()) {
    current = current->get_subcommands().front();
    if (!name.empty()) name += ' ';
    name += current->get_name();
  }
  return name.empty() ? "kere" : name;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel expectile regression"};
  app.set_version_flag("--version", std::string(kere::version_string));
  app.require_subcommand(1);
  app.footer("The KERE_THREADS environment variable caps internal parallelism.");

  auto fit_args = std::make_shared<FitCmd>();
  CLI::App* fit = app.add_subcommand("fit", "fit one model and write a model file");
  add_data_flags(*fit, fit_args->data);
  add_kernel_flags(*fit, fit_args->kernel);
  add_solve_flags(*fit, fit_args->solve);
  fit->add_option("--omega", fit_args->omega, "expectile level in (0, 1)")
      ->capture_default_str();
  fit->add_option("--lambda", fit_args->lambda, "penalty strength")->required();
  fit->add_option("--standardize", fit_args->standardize,
                  "standardize features first (default: on for rbf, off otherwise)")
      ->check(CLI::IsMember({"on", "off"}));
  fit->add_flag("--rate-bound", fit_args->rate_bound,
                "also compute the contraction bound (one extra eigensolve)");
  fit->add_option("--seed", fit_args->seed, "recorded in the model provenance")
      ->capture_default_str();
  fit->add_option("--out", fit_args->out, "model file path")->required();
  fit->callback([fit_args] { run_fit(*fit_args); });

  auto path_args = std::make_shared<PathCmd>();
  CLI::App* path_cmd =
      app.add_subcommand("path", "fit a descending penalty grid with warm starts");
  add_data_flags(*path_cmd, path_args->data);
  add_kernel_flags(*path_cmd, path_args->kernel);
  add_solve_flags(*path_cmd, path_args->solve);
  path_cmd->add_option("--omega", path_args->omega, "expectile level in (0, 1)")
      ->capture_default_str();
  path_cmd->add_option("--lambda-max", path_args->lambda_max,
                       "largest penalty; nonpositive selects the probe default");
  path_cmd->add_option("--lambda-min", path_args->lambda_min,
                       "smallest penalty; nonpositive selects 1e-4 * lambda-max");
  path_cmd->add_option("--nlambda", path_args->nlambda, "grid size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  path_cmd->add_option("--standardize", path_args->standardize,
                       "standardize features first (default: on for rbf, off otherwise)")
      ->check(CLI::IsMember({"on", "off"}));
  path_cmd->add_flag("--rate-bound", path_args->rate_bound,
                     "compute the contraction bound at every grid point (slow)");
  path_cmd->add_option("--seed", path_args->seed, "recorded in the sidecar")
      ->capture_default_str();
  path_cmd->add_option("--out", path_args->out, "per-penalty CSV path")->required();
  path_cmd->callback([path_args] { run_path(*path_args); });

  auto cv_args = std::make_shared<CvCmd>();
  CLI::App* cv = app.add_subcommand(
      "cv", "k-fold search over bandwidth and penalty; writes grid CSV + best JSON");
  add_data_flags(*cv, cv_args->data);
  add_kernel_flags(*cv, cv_args->kernel);
  add_solve_flags(*cv, cv_args->solve);
  cv->add_option("--omega", cv_args->omega, "expectile level in (0, 1)")
      ->capture_default_str();
  cv->add_option("--folds", cv_args->folds, "number of folds")->capture_default_str();
  cv->add_option("--sigma2-grid", cv_args->sigma2_grid,
                 "comma-separated rbf bandwidths (default: median heuristic grid)")
      ->delimiter(',');
  cv->add_option("--lambda-max", cv_args->lambda_max,
                 "largest penalty; nonpositive selects the probe default");
  cv->add_option("--lambda-min", cv_args->lambda_min,
                 "smallest penalty; nonpositive selects 1e-4 * lambda-max");
  cv->add_option("--nlambda", cv_args->nlambda, "penalty grid size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cv->add_option("--standardize", cv_args->standardize,
                 "standardize features first (default: on for rbf, off otherwise)")
      ->check(CLI::IsMember({"on", "off"}));
  cv->add_option("--seed", cv_args->seed, "fold shuffle seed")->capture_default_str();
  cv->add_option("--out", cv_args->out, "grid CSV path")->required();
  cv->callback([cv_args] { run_cv(*cv_args); });

  auto predict_args = std::make_shared<PredictCmd>();
  CLI::App* predict = app.add_subcommand("predict", "evaluate a saved model on new rows");
  predict->add_option("--model", predict_args->model, "model file from fit")->required();
  predict->add_option("--data", predict_args->data, "feature CSV with a header row")
      ->required();
  predict->add_option("--response", predict_args->response,
                      "column to drop before predicting (name or index)");
  predict->add_option("--seed", predict_args->seed, "recorded in the sidecar")
      ->capture_default_str();
  predict->add_option("--out", predict_args->out, "prediction CSV path")->required();
  predict->callback([predict_args] { run_predict(*predict_args); });

  CLI::App* simulate = app.add_subcommand("simulate", "generate benchmark datasets");
  simulate->require_subcommand(1);

  auto sim1_args = std::make_shared<SimulateCmd>();
  sim1_args->n = 400;
  sim1_args->error = "mixed";
  CLI::App* sim1 = simulate->add_subcommand(
      "sim1", "single covariate with heteroscedastic noise");
  sim1->add_option("--n", sim1_args->n, "sample size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim1->add_option("--error", sim1_args->error, "error family")
      ->check(CLI::IsMember({"laplace", "mixed"}))
      ->capture_default_str();
  sim1->add_option("--seed", sim1_args->seed, "generator seed")->capture_default_str();
  sim1->add_option("--out", sim1_args->out, "dataset CSV path")->required();
  sim1->callback([sim1_args] { run_simulate_sim1(*sim1_args); });

  auto sim2_args = std::make_shared<SimulateCmd>();
  sim2_args->n = 300;
  sim2_args->error = "normal";
  CLI::App* sim2 = simulate->add_subcommand(
      "sim2", "random-function surface over a multivariate normal design");
  sim2->add_option("--n", sim2_args->n, "sample size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim2->add_option("--p", sim2_args->p, "covariate count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim2->add_option("--error", sim2_args->error, "error family")
      ->check(CLI::IsMember({"normal", "t4", "mixed"}))
      ->capture_default_str();
  sim2->add_flag("--het", sim2_args->het, "heteroscedastic noise scale |f2|");
  sim2->add_option("--seed", sim2_args->seed, "generator seed")->capture_default_str();
  sim2->add_option("--out", sim2_args->out, "dataset CSV path")->required();
  sim2->callback([sim2_args] { run_simulate_sim2(*sim2_args); });

  CLI::App* bench = app.add_subcommand("bench", "benchmark studies and timings");
  bench->require_subcommand(1);

  auto b1_args = std::make_shared<BenchSim1Cmd>();
  CLI::App* b1 = bench->add_subcommand("sim1", "accuracy study on the univariate design");
  b1->add_option("--reps", b1_args->reps, "replications")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  b1->add_option("--omegas", b1_args->omegas, "comma-separated expectile levels")
      ->delimiter(',');
  b1->add_option("--n", b1_args->n, "training size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  b1->add_option("--test-n", b1_args->test_n, "test size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  b1->add_option("--error", b1_args->error, "error family")
      ->check(CLI::IsMember({"laplace", "mixed", "both"}))
      ->capture_default_str();
  b1->add_option("--folds", b1_args->folds, "cross-validation folds")
      ->capture_default_str();
  b1->add_option("--nlambda", b1_args->nlambda, "penalty grid size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  b1->add_flag("--curves", b1_args->curves,
               "also write fitted-versus-true curves on an x grid");
  b1->add_option("--seed", b1_args->seed, "master seed")->capture_default_str();
  b1->add_option("--out", b1_args->out, "output path prefix")->required();
  b1->callback([b1_args] { run_bench_sim1(*b1_args); });

  auto b2_args = std::make_shared<BenchSim2Cmd>();
  CLI::App* b2 = bench->add_subcommand("sim2", "accuracy study on the multivariate design");
  b2->add_option("--reps", b2_args->reps, "replications")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  b2->add_option("--omegas", b2_args->omegas, "comma-separated expectile levels")
      ->delimiter(',');
  b2->add_option("--n", b2_args->n, "training size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  b2->add_option("--test-n", b2_args->test_n, "test size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  b2->add_option("--p", b2_args->p, "covariate count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  b2->add_option("--error", b2_args->error, "error family")
      ->check(CLI::IsMember({"normal", "t4", "mixed", "all"}))
      ->capture_default_str();
  b2->add_option("--variance", b2_args->variance, "noise scale variant")
      ->check(CLI::IsMember({"homo", "het", "both"}))
      ->capture_default_str();
  b2->add_option("--folds", b2_args->folds, "cross-validation folds")
      ->capture_default_str();
  b2->add_option("--nlambda", b2_args->nlambda, "penalty grid size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  b2->add_option("--seed", b2_args->seed, "master seed")->capture_default_str();
  b2->add_option("--out", b2_args->out, "output path prefix")->required();
  b2->callback([b2_args] { run_bench_sim2(*b2_args); });

  auto bs_args = std::make_shared<BenchScalingCmd>();
  CLI::App* bs = bench->add_subcommand("scaling", "wall time against sample size");
  bs->add_option("--sizes", bs_args->sizes, "comma-separated sample sizes")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  bs->add_option("--reps", bs_args->reps, "repeats per size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bs->add_option("--omega", bs_args->omega, "expectile level in (0, 1)")
      ->capture_default_str();
  bs->add_option("--error", bs_args->error, "error family")
      ->check(CLI::IsMember({"laplace", "mixed"}))
      ->capture_default_str();
  bs->add_option("--nlambda", bs_args->nlambda, "penalty grid size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bs->add_option("--seed", bs_args->seed, "master seed")->capture_default_str();
  bs->add_option("--out", bs_args->out, "output path prefix")->required();
  bs->callback([bs_args] { run_bench_scaling(*bs_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // help or version request
    return kere::cli::fail(active_command(app), e.what());
  } catch (const std::exception& e) {
    return kere::cli::fail(active_command(app), e.what());
  }
  return 0;
}
