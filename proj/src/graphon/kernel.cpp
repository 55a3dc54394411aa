#include "coweave/graphon/kernel.hpp"

#include <cmath>

#include "coweave/core/csv.hpp"

namespace coweave {

step_kernel step_kernel::uniform(int n, double fill) {
  step_kernel k;
  k.n = n;
  k.masses.assign(static_cast<size_t>(n), 1.0 / n);
  k.values.assign(static_cast<size_t>(n) * n, fill);
  return k;
}

step_kernel step_kernel::with_masses(std::vector<double> masses, double fill) {
  step_kernel k;
  k.n = static_cast<int>(masses.size());
  k.masses = std::move(masses);
  k.values.assign(static_cast<size_t>(k.n) * k.n, fill);
  k.validate();
  return k;
}

void step_kernel::validate() const {
  if (n < 1) throw config_error("step_kernel: needs at least one label");
  if (masses.size() != static_cast<size_t>(n) || values.size() != static_cast<size_t>(n) * n) {
    throw config_error("step_kernel: size mismatch");
  }
  double total = 0.0;
  for (double m : masses) {
    if (!(m > 0.0)) throw config_error("step_kernel: masses must be strictly positive");
    total += m;
  }
  if (std::fabs(total - 1.0) > 1e-12) {
    throw config_error("step_kernel: masses must sum to 1 (got " + std::to_string(total) + ")");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw config_error("step_kernel: non-finite value");
  }
}

double step_kernel::sup_norm() const {
  double s = 0.0;
  for (double v : values) s = std::fmax(s, std::fabs(v));
  return s;
}

step_kernel step_kernel::load(const std::string& path) {
  const csv_table t = read_csv(path);
  step_kernel k;
  k.n = static_cast<int>(t.header.size());
  if (k.n < 1) throw config_error("kernel file '" + path + "': empty");
  if (t.rows.size() != static_cast<size_t>(k.n)) {
    throw config_error("kernel file '" + path + "': expected " + std::to_string(k.n) + " value rows");
  }
  // Header row holds the masses (numeric).
  csv_table masses_row;
  masses_row.header = {};
  for (int j = 0; j < k.n; ++j) {
    char* end = nullptr;
    const double m = std::strtod(t.header[static_cast<size_t>(j)].c_str(), &end);
    if (!end || *end != '\0') {
      throw config_error("kernel file '" + path + "': mass row must be numeric");
    }
    k.masses.push_back(m);
  }
  k.values.resize(static_cast<size_t>(k.n) * k.n);
  for (int i = 0; i < k.n; ++i) {
    if (t.rows[static_cast<size_t>(i)].size() != static_cast<size_t>(k.n)) {
      throw config_error("kernel file '" + path + "': row " + std::to_string(i) + " has wrong width");
    }
    for (int j = 0; j < k.n; ++j) k.at(i, j) = t.as_double(static_cast<size_t>(i), j);
  }
  k.validate();
  return k;
}

void step_kernel::save(const std::string& path) const {
  std::vector<std::string> header;
  header.reserve(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) header.push_back(format_double(masses[static_cast<size_t>(j)]));
  csv_writer w(header);
  for (int i = 0; i < n; ++i) {
    w.begin_row();
    for (int j = 0; j < n; ++j) w.push(at(i, j));
  }
  w.save(path);
}

double rectangle_sum(const step_kernel& k, const std::vector<int>& rows,
                     const std::vector<int>& cols) {
  double total = 0.0;
  for (int i : rows) {
    double row_acc = 0.0;
    for (int j : cols) row_acc += k.masses[static_cast<size_t>(j)] * k.at(i, j);
    total += k.masses[static_cast<size_t>(i)] * row_acc;
  }
  return std::fabs(total);
}

step_kernel kernel_difference(const step_kernel& k1, const step_kernel& k2) {
  if (k1.n != k2.n) throw config_error("kernel_difference: label counts differ");
  for (int i = 0; i < k1.n; ++i) {
    if (std::fabs(k1.masses[static_cast<size_t>(i)] - k2.masses[static_cast<size_t>(i)]) > 1e-12) {
      throw config_error("kernel_difference: masses differ at label " + std::to_string(i));
    }
  }
  step_kernel d = k1;
  for (size_t idx = 0; idx < d.values.size(); ++idx) d.values[idx] -= k2.values[idx];
  return d;
}

}  // namespace coweave
