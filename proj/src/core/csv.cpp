#include "coweave/core/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "coweave/core/error.hpp"

namespace coweave {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

csv_writer::csv_writer(std::vector<std::string> header) : header_(std::move(header)) {}

void csv_writer::begin_row() { rows_.emplace_back(); }

void csv_writer::push(double v) { rows_.back().push_back(format_double(v)); }

void csv_writer::push(std::int64_t v) { rows_.back().push_back(std::to_string(v)); }

void csv_writer::push(std::uint64_t v) { rows_.back().push_back(std::to_string(v)); }

void csv_writer::push(const std::string& v) { rows_.back().push_back(v); }

void csv_writer::push(bool v) { rows_.back().push_back(v ? "true" : "false"); }

std::string csv_writer::str() const {
  std::ostringstream os;
  for (size_t i = 0; i < header_.size(); ++i) {
    if (i) os << ',';
    os << header_[i];
  }
  os << '\n';
  for (const auto& row : rows_) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      os << row[i];
    }
    os << '\n';
  }
  return os.str();
}

void csv_writer::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot write file '" + path + "'");
  out << str();
}

int csv_table::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

double csv_table::as_double(size_t row, int col) const {
  if (row >= rows.size() || col < 0 || static_cast<size_t>(col) >= rows[row].size()) {
    throw config_error("csv: cell out of range");
  }
  char* end = nullptr;
  const double v = std::strtod(rows[row][col].c_str(), &end);
  if (!end || *end != '\0') throw config_error("csv: cannot parse number '" + rows[row][col] + "'");
  return v;
}

csv_table parse_csv(const std::string& text) {
  csv_table t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        cells.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    cells.push_back(cur);
    if (first) {
      t.header = cells;
      first = false;
    } else {
      t.rows.push_back(cells);
    }
  }
  return t;
}

csv_table read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

}  // namespace coweave
