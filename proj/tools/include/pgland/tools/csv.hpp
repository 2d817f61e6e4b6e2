#pragma once

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pgland::tools {

/// 12 significant digits in general notation, independent of the C locale.
/// NaN prints as "nan" and negative zero as "0".
std::string format_number(double v);
std::string format_number(long v);
std::string format_flag(bool v);
/// Space-separated entries, row-major for matrices.
std::string format_vector(const Eigen::Ref<const Eigen::MatrixXd>& m);

/// Writes rows as they arrive and flushes each one, so a run that fails part
/// way still leaves every completed row on disk.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::size_t columns_;
  std::string path_;
};

/// Ordered `key = value` metadata written next to the CSV.
class Sidecar {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value) { set(key, format_number(value)); }
  void set(const std::string& key, long value) { set(key, format_number(value)); }
  void set(const std::string& key, int value) { set(key, format_number(static_cast<long>(value))); }
  void set(const std::string& key, bool value) { set(key, format_flag(value)); }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  const std::string* find(const std::string& key) const;
  void write(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace pgland::tools
