#include "cli_io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "kere/version.hpp"

namespace kere::cli {

std::string fmt17(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string join17(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ',';
    out += fmt17(values[i]);
  }
  return out;
}

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i > 0) body_ += ',';
    body_ += header[i];
  }
  body_ += '\n';
}

CsvTable& CsvTable::cell(const std::string& value) {
  if (in_row_ > 0) body_ += ',';
  body_ += value;
  ++in_row_;
  return *this;
}

CsvTable& CsvTable::cell(const char* value) { return cell(std::string(value)); }

CsvTable& CsvTable::cell(double value) { return cell(fmt17(value)); }

CsvTable& CsvTable::cell(std::int64_t value) { return cell(std::to_string(value)); }

void CsvTable::end_row() {
  if (in_row_ != columns_)
    throw std::logic_error("csv row arity mismatch");
  body_ += '\n';
  in_row_ = 0;
}

std::string CsvTable::str() const {
  if (in_row_ > 0) throw std::logic_error("csv row left open");
  return body_;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write to " + path + " failed");
}

nlohmann::json provenance_json(const std::string& command, std::uint64_t seed,
                               const nlohmann::json& flags) {
  return nlohmann::json{{"tool", "kere"},
                        {"version", version_string},
                        {"command", command},
                        {"seed", seed},
                        {"flags", flags}};
}

std::map<std::string, std::string> provenance_strings(const std::string& command,
                                                      std::uint64_t seed,
                                                      const nlohmann::json& flags) {
  std::map<std::string, std::string> out;
  out["command"] = command;
  out["seed"] = std::to_string(seed);
  for (const auto& [key, value] : flags.items())
    out[key] = value.is_string() ? value.get<std::string>() : value.dump();
  return out;
}

int fail(const std::string& command, const std::string& message) {
  const nlohmann::json report{{"error", {{"command", command}, {"message", message}}}};
  std::fprintf(stderr, "%s\n", report.dump().c_str());
  return 1;
}

}  // namespace kere::cli
