#pragma once

// Flat "key = value" text files used for metadata, configs and reports.

#include "core.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace paintpath {

class KeyValues {
public:
  bool has(const std::string &key) const { return values_.count(key) != 0; }

  const std::string &get(const std::string &key) const {
    auto it = values_.find(key);
    if (it == values_.end())
      throw ValidationError("missing key '" + key + "'");
    return it->second;
  }
  std::string get_or(const std::string &key, const std::string &dflt) const {
    auto it = values_.find(key);
    return it == values_.end() ? dflt : it->second;
  }
  double get_double(const std::string &key) const { return parse_double(get(key)); }
  double get_double_or(const std::string &key, double dflt) const {
    return has(key) ? get_double(key) : dflt;
  }
  long long get_int(const std::string &key) const { return parse_int(get(key)); }
  long long get_int_or(const std::string &key, long long dflt) const { return has(key) ? get_int(key) : dflt; }

  void set(const std::string &key, const std::string &value) { values_[key] = value; }
  void set(const std::string &key, const char *value) { values_[key] = value; }
  void set(const std::string &key, double value) { values_[key] = format_double(value); }
  void set(const std::string &key, long long value) { values_[key] = std::to_string(value); }
  void set(const std::string &key, int value) { values_[key] = std::to_string(value); }
  void set(const std::string &key, std::size_t value) { values_[key] = std::to_string(value); }

  /// Entries of `other` replace ours.
  void merge(const KeyValues &other) {
    for (const auto &[k, v] : other.values_)
      values_[k] = v;
  }

  const std::map<std::string, std::string> &entries() const { return values_; }

  static KeyValues parse(std::istream &in) {
    KeyValues kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos)
        line.erase(hash);
      auto eq = line.find('=');
      auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t\r");
        auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      if (trim(line).empty())
        continue;
      if (eq == std::string::npos)
        throw IoError("key-value line " + std::to_string(lineno) + " has no '='");
      auto key = trim(line.substr(0, eq));
      if (key.empty())
        throw IoError("key-value line " + std::to_string(lineno) + " has an empty key");
      kv.values_[key] = trim(line.substr(eq + 1));
    }
    return kv;
  }

  static KeyValues load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
      throw IoError("cannot open " + path.string());
    return parse(in);
  }

  void write(std::ostream &out) const {
    for (const auto &[k, v] : values_)
      out << k << " = " << v << '\n';
  }

  void save(const std::filesystem::path &path) const {
    std::ofstream out(path);
    if (!out)
      throw IoError("cannot write " + path.string());
    write(out);
  }

private:
  std::map<std::string, std::string> values_;
};

} // namespace paintpath
