// Deterministic CSV reading/writing. All floating-point output goes through
// "%.17g" so a value round-trips exactly and reruns are byte-identical.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace coweave {

std::string format_double(double v);

// Row-oriented writer; build rows with push calls, then save.
class csv_writer {
public:
  explicit csv_writer(std::vector<std::string> header);

  void begin_row();
  void push(double v);
  void push(std::int64_t v);
  void push(std::uint64_t v);
  void push(int v) { push(static_cast<std::int64_t>(v)); }
  void push(const std::string& v);
  void push(bool v);

  std::string str() const;
  void save(const std::string& path) const;

private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct csv_table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 if absent
  double as_double(size_t row, int col) const;
};

csv_table read_csv(const std::string& path);
csv_table parse_csv(const std::string& text);

}  // namespace coweave
