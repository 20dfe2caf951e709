#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace aedopt {

// Declarative run configuration: a flat `key = value` text file, with CLI
// flags layered on top. Typed accessors pull values with defaults; required
// keys throw ConfigError naming the missing field.
class RunConfig {
 public:
  static RunConfig from_file(const std::string& path);
  static RunConfig from_text(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string str(const std::string& key, const std::string& def) const;
  double num(const std::string& key, double def) const;
  int64_t integer(const std::string& key, int64_t def) const;
  bool flag(const std::string& key, bool def) const;
  std::vector<double> num_list(const std::string& key,
                               const std::vector<double>& def) const;
  std::vector<std::string> str_list(const std::string& key,
                                    const std::vector<std::string>& def) const;

  std::string require_str(const std::string& key) const;

  uint64_t master_seed() const;

  // Hash over all keys except the output location, so re-running the same
  // configuration into a different directory yields identical artifacts.
  uint64_t hash() const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace aedopt
