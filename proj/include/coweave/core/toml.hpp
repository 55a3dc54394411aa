// Minimal TOML-subset reader for run configuration files.
//
// Supported grammar (documented in docs/file-formats.md): [section] headers,
// `key = value` pairs, `#` comments, and values of type string ("..."),
// integer, float, boolean, or flat array [v1, v2, ...]. This covers every
// configuration key the toolkit defines; nested tables, dotted keys, dates,
// and multi-line strings are intentionally out of scope.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "coweave/core/error.hpp"

namespace coweave {

struct toml_value {
  enum class kind { integer, real, boolean, string, array };
  kind type = kind::integer;
  std::int64_t i = 0;
  double d = 0.0;
  bool b = false;
  std::string s;
  std::vector<toml_value> arr;
};

// section -> key -> value; keys outside any [section] live under "".
class toml_doc {
public:
  static toml_doc parse(const std::string& text);
  static toml_doc parse_file(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  const std::map<std::string, std::map<std::string, toml_value>>& sections() const { return data_; }

  std::int64_t get_i64(const std::string& section, const std::string& key) const;
  std::int64_t get_i64_or(const std::string& section, const std::string& key, std::int64_t fallback) const;
  double get_f64(const std::string& section, const std::string& key) const;  // integer promotes
  double get_f64_or(const std::string& section, const std::string& key, double fallback) const;
  bool get_bool_or(const std::string& section, const std::string& key, bool fallback) const;
  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string_or(const std::string& section, const std::string& key,
                            const std::string& fallback) const;
  std::vector<std::int64_t> get_i64_array(const std::string& section, const std::string& key) const;
  std::vector<double> get_f64_array(const std::string& section, const std::string& key) const;

  // Canonical serialization (sorted sections/keys, full float precision);
  // input to the config hash so logically equal configs hash equal.
  std::string canonical() const;

private:
  const toml_value& require(const std::string& section, const std::string& key) const;
  std::map<std::string, std::map<std::string, toml_value>> data_;
};

// FNV-1a 64-bit over the canonical serialization; recorded in every output.
std::uint64_t config_hash(const toml_doc& doc);

}  // namespace coweave
