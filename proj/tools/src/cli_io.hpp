#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace kere::cli {

/// %.17g rendering; enough digits to round-trip any double through text.
std::string fmt17(double value);

/// fmt17 values joined with commas, for echoing list-valued flags.
std::string join17(const std::vector<double>& values);

/** Accumulates rows of fixed arity and renders them as CSV with LF line
 *  endings.  Numeric cells go through fmt17 so reruns are byte-stable. */
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& cell(const std::string& value);
  CsvTable& cell(const char* value);
  CsvTable& cell(double value);
  CsvTable& cell(std::int64_t value);
  CsvTable& cell(int value) { return cell(static_cast<std::int64_t>(value)); }
  /// Closes the current row; throws std::logic_error on arity mismatch.
  void end_row();

  std::string str() const;

 private:
  std::size_t columns_;
  std::size_t in_row_ = 0;
  std::string body_;
};

/// Writes text to path, replacing any existing file.
void write_text_file(const std::string& path, const std::string& text);

/** Sidecar skeleton shared by every command: tool name, version, command,
 *  seed and the fully resolved flag set. */
nlohmann::json provenance_json(const std::string& command, std::uint64_t seed,
                               const nlohmann::json& flags);

/// The same content flattened to strings for the model file provenance map.
std::map<std::string, std::string> provenance_strings(const std::string& command,
                                                      std::uint64_t seed,
                                                      const nlohmann::json& flags);

/// Prints one machine-readable error object to stderr; returns the exit code.
int fail(const std::string& command, const std::string& message);

}  // namespace kere::cli
