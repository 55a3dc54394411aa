#include "coweave/core/toml.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace coweave {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Strip a trailing comment that is not inside a string literal.
std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

[[noreturn]] void fail(int line_no, const std::string& msg) {
  throw config_error("config line " + std::to_string(line_no) + ": " + msg);
}

toml_value parse_scalar(const std::string& raw, int line_no) {
  toml_value v;
  const std::string t = trim(raw);
  if (t.empty()) fail(line_no, "empty value");
  if (t.front() == '"') {
    if (t.size() < 2 || t.back() != '"') fail(line_no, "unterminated string");
    v.type = toml_value::kind::string;
    std::string out;
    for (size_t i = 1; i + 1 < t.size(); ++i) {
      if (t[i] == '\\' && i + 2 < t.size()) {
        ++i;
        switch (t[i]) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(line_no, std::string("unsupported escape \\") + t[i]);
        }
      } else {
        out += t[i];
      }
    }
    v.s = out;
    return v;
  }
  if (t == "true" || t == "false") {
    v.type = toml_value::kind::boolean;
    v.b = (t == "true");
    return v;
  }
  // Number: integer if it parses fully without . e E inf nan.
  const bool looks_float = t.find_first_of(".eE") != std::string::npos || t == "inf" || t == "-inf" ||
                           t == "nan";
  errno = 0;
  char* end = nullptr;
  if (!looks_float) {
    const long long iv = std::strtoll(t.c_str(), &end, 10);
    if (end && *end == '\0' && errno == 0) {
      v.type = toml_value::kind::integer;
      v.i = iv;
      return v;
    }
  }
  errno = 0;
  end = nullptr;
  const double dv = std::strtod(t.c_str(), &end);
  if (!end || *end != '\0' || errno == ERANGE) fail(line_no, "cannot parse value '" + t + "'");
  v.type = toml_value::kind::real;
  v.d = dv;
  return v;
}

// Split a flat [a, b, c] array body into element strings (no nesting).
std::vector<std::string> split_array(const std::string& body, int line_no) {
  std::vector<std::string> parts;
  std::string cur;
  bool in_str = false;
  for (char ch : body) {
    if (ch == '"') in_str = !in_str;
    if (ch == ',' && !in_str) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!trim(cur).empty()) parts.push_back(cur);
  for (auto& p : parts) {
    if (trim(p).empty()) fail(line_no, "empty array element");
  }
  return parts;
}

void format_value(std::ostringstream& os, const toml_value& v) {
  char buf[64];
  switch (v.type) {
    case toml_value::kind::integer:
      os << v.i;
      break;
    case toml_value::kind::real:
      std::snprintf(buf, sizeof(buf), "%.17g", v.d);
      os << buf;
      break;
    case toml_value::kind::boolean:
      os << (v.b ? "true" : "false");
      break;
    case toml_value::kind::string:
      os << '"' << v.s << '"';
      break;
    case toml_value::kind::array: {
      os << '[';
      for (size_t i = 0; i < v.arr.size(); ++i) {
        if (i) os << ',';
        format_value(os, v.arr[i]);
      }
      os << ']';
      break;
    }
  }
}

}  // namespace

toml_doc toml_doc::parse(const std::string& text) {
  toml_doc doc;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail(line_no, "empty section name");
      doc.data_[section];  // section may legitimately stay empty
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "empty key");
    if (doc.data_[section].count(key)) fail(line_no, "duplicate key '" + key + "'");
    toml_value v;
    if (!val.empty() && val.front() == '[') {
      // Arrays may span lines; keep reading until the closing bracket.
      while (val.find(']') == std::string::npos) {
        std::string more;
        if (!std::getline(in, more)) fail(line_no, "unterminated array");
        ++line_no;
        val += " " + trim(strip_comment(more));
      }
      if (trim(val).back() != ']') fail(line_no, "trailing content after array");
      const std::string body = trim(val).substr(1, trim(val).size() - 2);
      v.type = toml_value::kind::array;
      for (const auto& part : split_array(body, line_no)) {
        v.arr.push_back(parse_scalar(part, line_no));
      }
    } else {
      v = parse_scalar(val, line_no);
    }
    doc.data_[section][key] = v;
  }
  return doc;
}

toml_doc toml_doc::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool toml_doc::has(const std::string& section, const std::string& key) const {
  auto it = data_.find(section);
  return it != data_.end() && it->second.count(key) > 0;
}

const toml_value& toml_doc::require(const std::string& section, const std::string& key) const {
  auto it = data_.find(section);
  if (it == data_.end() || !it->second.count(key)) {
    throw config_error("config: missing required key [" + section + "] " + key);
  }
  return it->second.at(key);
}

std::int64_t toml_doc::get_i64(const std::string& section, const std::string& key) const {
  const toml_value& v = require(section, key);
  if (v.type != toml_value::kind::integer) {
    throw config_error("config: [" + section + "] " + key + " must be an integer");
  }
  return v.i;
}

std::int64_t toml_doc::get_i64_or(const std::string& section, const std::string& key,
                                  std::int64_t fallback) const {
  return has(section, key) ? get_i64(section, key) : fallback;
}

double toml_doc::get_f64(const std::string& section, const std::string& key) const {
  const toml_value& v = require(section, key);
  if (v.type == toml_value::kind::integer) return static_cast<double>(v.i);
  if (v.type != toml_value::kind::real) {
    throw config_error("config: [" + section + "] " + key + " must be a number");
  }
  return v.d;
}

double toml_doc::get_f64_or(const std::string& section, const std::string& key, double fallback) const {
  return has(section, key) ? get_f64(section, key) : fallback;
}

bool toml_doc::get_bool_or(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const toml_value& v = require(section, key);
  if (v.type != toml_value::kind::boolean) {
    throw config_error("config: [" + section + "] " + key + " must be a boolean");
  }
  return v.b;
}

std::string toml_doc::get_string(const std::string& section, const std::string& key) const {
  const toml_value& v = require(section, key);
  if (v.type != toml_value::kind::string) {
    throw config_error("config: [" + section + "] " + key + " must be a string");
  }
  return v.s;
}

std::string toml_doc::get_string_or(const std::string& section, const std::string& key,
                                    const std::string& fallback) const {
  return has(section, key) ? get_string(section, key) : fallback;
}

std::vector<std::int64_t> toml_doc::get_i64_array(const std::string& section,
                                                  const std::string& key) const {
  const toml_value& v = require(section, key);
  if (v.type != toml_value::kind::array) {
    throw config_error("config: [" + section + "] " + key + " must be an array");
  }
  std::vector<std::int64_t> out;
  for (const auto& e : v.arr) {
    if (e.type != toml_value::kind::integer) {
      throw config_error("config: [" + section + "] " + key + " must hold integers");
    }
    out.push_back(e.i);
  }
  return out;
}

std::vector<double> toml_doc::get_f64_array(const std::string& section, const std::string& key) const {
  const toml_value& v = require(section, key);
  if (v.type != toml_value::kind::array) {
    throw config_error("config: [" + section + "] " + key + " must be an array");
  }
  std::vector<double> out;
  for (const auto& e : v.arr) {
    if (e.type == toml_value::kind::integer) {
      out.push_back(static_cast<double>(e.i));
    } else if (e.type == toml_value::kind::real) {
      out.push_back(e.d);
    } else {
      throw config_error("config: [" + section + "] " + key + " must hold numbers");
    }
  }
  return out;
}

std::string toml_doc::canonical() const {
  std::ostringstream os;
  for (const auto& [section, keys] : data_) {
    os << '[' << section << "]\n";
    for (const auto& [key, value] : keys) {
      os << key << '=';
      format_value(os, value);
      os << '\n';
    }
  }
  return os.str();
}

std::uint64_t config_hash(const toml_doc& doc) {
  const std::string text = doc.canonical();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace coweave
