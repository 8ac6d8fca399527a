#include "exp_config.hpp"

#include <lorl/error.hpp>
#include <lorl/serialize.hpp>

#include <fstream>
#include <sstream>

namespace lorl::cli {

void ExperimentConfig::set(const std::string& key, double value) {
  entries_[key] = format_double(value);
}

void ExperimentConfig::set(const std::string& key, long long value) {
  entries_[key] = std::to_string(value);
}

const std::string& ExperimentConfig::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw Error("config: missing key " + key);
  return it->second;
}

double ExperimentConfig::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : std::stod(it->second);
}

long long ExperimentConfig::get_int(const std::string& key, long long fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : std::stoll(it->second);
}

std::string ExperimentConfig::canonical_text() const {
  std::string out;
  for (const auto& [key, value] : entries_) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  }
  return out;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(canonical_text()); }

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(std::istream& is) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#' || stripped[0] == '[') continue;
    size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw ParseError("config line " + std::to_string(lineno) + ": empty key");
    cfg.entries_[key] = value;
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open " + path);
  return parse(in);
}

void ExperimentConfig::apply_override(const std::string& key_equals_value) {
  size_t eq = key_equals_value.find('=');
  if (eq == std::string::npos)
    throw Error("config override must look like key=value: " + key_equals_value);
  entries_[trim(key_equals_value.substr(0, eq))] = trim(key_equals_value.substr(eq + 1));
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void write_config_comment(std::ostream& os, const ExperimentConfig& cfg) {
  for (const auto& [key, value] : cfg.entries()) os << "# cfg " << key << '=' << value << '\n';
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(cfg.hash()));
  os << "# config_hash " << buf << '\n';
}

bool check_csv_config_hash(std::istream& is, std::string* message) {
  ExperimentConfig cfg;
  std::string line;
  std::string recorded;
  while (std::getline(is, line)) {
    if (line.rfind("# cfg ", 0) == 0) {
      cfg.apply_override(line.substr(6));
    } else if (line.rfind("# config_hash ", 0) == 0) {
      recorded = trim(line.substr(14));
      break;
    } else if (!line.empty() && line[0] != '#') {
      break;
    }
  }
  if (recorded.empty()) {
    if (message) *message = "no config_hash comment found";
    return false;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(cfg.hash()));
  if (recorded != buf) {
    if (message) *message = "config hash mismatch: recorded " + recorded + ", recomputed " + buf;
    return false;
  }
  if (message) *message = "config hash ok: " + recorded;
  return true;
}

}  // namespace lorl::cli
