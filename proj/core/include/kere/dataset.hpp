#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace kere::io {

struct Dataset {
  std::vector<std::string> feature_names;  ///< file order, response removed
  std::string response_name;
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::string source_path;
};

/** Loads a numeric CSV with a header row and splits off the response.
 *
 *  The response is matched against column names first; otherwise, if the
 *  string parses as a nonnegative integer below the column count, it is
 *  taken as a zero-based index.  Cells must parse fully as finite numbers;
 *  errors name the file, data row and column.  Throws std::runtime_error
 *  on any I/O or parse problem.
 */
Dataset load_csv(const std::string& path, const std::string& response);

struct FeatureTable {
  std::vector<std::string> names;
  Eigen::MatrixXd X;
};

/** Loads all numeric columns from a CSV with a header row; when drop
 *  matches a column (same resolution rule as load_csv) that column is
 *  skipped. */
FeatureTable load_feature_csv(const std::string& path,
                              const std::optional<std::string>& drop = std::nullopt);

}  // namespace kere::io
