#include "aedopt/config.hpp"

#include <fstream>
#include <sstream>

#include "aedopt/csvio.hpp"
#include "aedopt/errors.hpp"
#include "aedopt/rng.hpp"

namespace aedopt {

namespace {
std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}
}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) +
                        " is not 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config: empty key at line " + std::to_string(lineno));
    cfg.kv_[key] = value;
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

bool RunConfig::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string RunConfig::str(const std::string& key, const std::string& def) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? def : it->second;
}

double RunConfig::num(const std::string& key, double def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  double v;
  if (!parse_double(it->second, v))
    throw ConfigError("config: key '" + key + "' is not a number");
  return v;
}

int64_t RunConfig::integer(const std::string& key, int64_t def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  long long v;
  if (!parse_long(it->second, v))
    throw ConfigError("config: key '" + key + "' is not an integer");
  return v;
}

bool RunConfig::flag(const std::string& key, bool def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: key '" + key + "' is not a boolean");
}

std::vector<double> RunConfig::num_list(const std::string& key,
                                        const std::vector<double>& def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  std::vector<double> out;
  for (const auto& tok : split_csv(it->second)) {
    if (tok.empty()) continue;
    double v;
    if (!parse_double(tok, v))
      throw ConfigError("config: key '" + key + "' has a non-numeric entry");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("config: key '" + key + "' is an empty list");
  return out;
}

std::vector<std::string> RunConfig::str_list(const std::string& key,
                                             const std::vector<std::string>& def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  std::vector<std::string> out;
  for (const auto& tok : split_csv(it->second))
    if (!tok.empty()) out.push_back(tok);
  if (out.empty()) throw ConfigError("config: key '" + key + "' is an empty list");
  return out;
}

std::string RunConfig::require_str(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end() || it->second.empty())
    throw ConfigError("config: missing required key '" + key + "'");
  return it->second;
}

uint64_t RunConfig::master_seed() const {
  return static_cast<uint64_t>(integer("seed", 1));
}

uint64_t RunConfig::hash() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_str = [&h](const std::string& s) {
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [k, v] : kv_) {
    // Execution details that provably do not change any result: the output
    // location and the attribution thread count (cells own their streams).
    if (k == "out_dir" || k == "threads") continue;
    mix_str(k);
    mix_str("=");
    mix_str(v);
    mix_str("\n");
  }
  return splitmix64(h);
}

}  // namespace aedopt
