#include "kere/model_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "kere/version.hpp"

namespace kere::io {
namespace {

using nlohmann::json;

json vec_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vec_from_json(const json& j) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& value : j) out[i++] = value.get<double>();
  return out;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::MatrixXd mat_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return {};
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd out(rows, cols);
  Eigen::Index i = 0;
  for (const auto& row : j) {
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw std::runtime_error("ragged matrix in model file");
    Eigen::Index c = 0;
    for (const auto& value : row) out(i, c++) = value.get<double>();
    ++i;
  }
  return out;
}

}  // namespace

std::string model_to_json(const Model& model) {
  json doc;
  doc["format"] = "kere-model";
  doc["format_version"] = 1;
  doc["tool_version"] = version_string;
  doc["omega"] = model.omega;
  doc["lambda"] = model.lambda;
  doc["kernel"] = {{"family", kernel::family_name(model.spec.family)},
                   {"sigma2", model.spec.sigma2},
                   {"kappa", model.spec.kappa},
                   {"theta", model.spec.theta},
                   {"degree", model.spec.degree}};
  doc["standardizer"] = {{"mean", vec_to_json(model.standardizer.mean)},
                         {"scale", vec_to_json(model.standardizer.scale)}};
  doc["inputs"] = mat_to_json(model.inputs);
  doc["intercept"] = model.coef.intercept;
  doc["alpha"] = vec_to_json(model.coef.alpha);
  doc["diagnostics"] = {{"iterations", model.iterations},
                        {"converged", model.converged},
                        {"objective", model.objective},
                        {"certificate", model.certificate},
                        {"rate_bound", model.rate_bound ? json(*model.rate_bound) : json()}};
  doc["provenance"] = model.provenance;
  return doc.dump(2) + "\n";
}

Model model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "kere-model")
      throw std::runtime_error("not a kere model file");
    if (doc.at("format_version").get<int>() != 1)
      throw std::runtime_error("unsupported model format version");

    Model model;
    model.omega = doc.at("omega").get<double>();
    model.lambda = doc.at("lambda").get<double>();
    const auto& k = doc.at("kernel");
    model.spec.family = kernel::family_from_name(k.at("family").get<std::string>());
    model.spec.sigma2 = k.at("sigma2").get<double>();
    model.spec.kappa = k.at("kappa").get<double>();
    model.spec.theta = k.at("theta").get<double>();
    model.spec.degree = k.at("degree").get<int>();
    model.standardizer.mean = vec_from_json(doc.at("standardizer").at("mean"));
    model.standardizer.scale = vec_from_json(doc.at("standardizer").at("scale"));
    model.inputs = mat_from_json(doc.at("inputs"));
    model.coef.intercept = doc.at("intercept").get<double>();
    model.coef.alpha = vec_from_json(doc.at("alpha"));
    const auto& diag = doc.at("diagnostics");
    model.iterations = diag.at("iterations").get<int>();
    model.converged = diag.at("converged").get<bool>();
    model.objective = diag.at("objective").get<double>();
    model.certificate = diag.at("certificate").get<double>();
    if (!diag.at("rate_bound").is_null())
      model.rate_bound = diag.at("rate_bound").get<double>();
    if (doc.contains("provenance"))
      model.provenance = doc.at("provenance").get<std::map<std::string, std::string>>();
    return model;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("model file is missing fields: ") + e.what());
  }
}

void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << model_to_json(model);
  if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return model_from_json(buffer.str());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error("'" + path + "': " + e.what());
  }
}

Eigen::VectorXd predict(const Model& model, const Eigen::MatrixXd& query) {
  if (query.cols() != model.inputs.cols())
    throw std::invalid_argument("predict: query has wrong feature dimension");
  const Eigen::MatrixXd q = model.standardizer.apply(query);
  const Eigen::MatrixXd cross = kernel::cross_gram(model.spec, model.inputs, q);
  return (cross.transpose() * model.coef.alpha).array() + model.coef.intercept;
}

}  // namespace kere::io
