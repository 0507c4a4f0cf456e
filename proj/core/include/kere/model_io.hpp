#pragma once

#include <Eigen/Core>

#include <map>
#include <optional>
#include <string>

#include "kere/kernel.hpp"
#include "kere/solver.hpp"

namespace kere::io {

/** A fitted expectile model plus everything needed to reproduce its
 *  predictions: kernel settings, the feature transform, the (transformed)
 *  training inputs and the coefficients.  Serializes to a single
 *  version-tagged JSON document whose numeric fields round-trip exactly. */
struct Model {
  double omega = 0.5;
  double lambda = 1.0;
  kernel::KernelSpec spec;
  kernel::Standardizer standardizer;  ///< applied to queries before the kernel
  Eigen::MatrixXd inputs;             ///< training inputs, already transformed
  solver::Coefficients coef;

  // diagnostics of the producing fit
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
  double certificate = 0.0;
  std::optional<double> rate_bound;

  /// Free-form provenance (command, flags, seed, ...), kept sorted on disk.
  std::map<std::string, std::string> provenance;
};

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

/// Serialization used by save_model; exposed for sidecar writers.
std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text);

/// Expectile predictions at raw query rows.
Eigen::VectorXd predict(const Model& model, const Eigen::MatrixXd& query);

}  // namespace kere::io
