#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace lorl::cli {

// Experiment configuration as ordered key = value pairs; the canonical text
// form is the sorted "key=value" list and the hash is FNV-1a 64 over it, so a
// config round-trips losslessly through files and CSV comment blocks.
class ExperimentConfig {
 public:
  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

  std::string canonical_text() const;
  std::uint64_t hash() const;

  // "key = value" lines, '#' comments and blank lines ignored
  static ExperimentConfig parse(std::istream& is);
  static ExperimentConfig parse_file(const std::string& path);
  void apply_override(const std::string& key_equals_value);  // "key=value"

 private:
  std::map<std::string, std::string> entries_;
};

std::uint64_t fnv1a64(const std::string& text);

// CSV preamble: "# cfg key=value" per entry followed by "# config_hash <hex>".
void write_config_comment(std::ostream& os, const ExperimentConfig& cfg);

// Re-reads the comment block of a CSV and checks the recorded hash against
// the recomputed one. Returns false on mismatch or a missing block.
bool check_csv_config_hash(std::istream& is, std::string* message);

}  // namespace lorl::cli
