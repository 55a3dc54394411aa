// Step kernels: bounded symmetric-or-not functions on a finite label space
// with strictly positive label masses summing to 1. The label space plays the
// role of the vertex-measure space; kernels need not be symmetric.
//
// File format (CSV, documented in docs/file-formats.md): first row = masses,
// then n rows of n kernel values.
#pragma once

#include <string>
#include <vector>

#include "coweave/core/error.hpp"

namespace coweave {

struct step_kernel {
  int n = 0;
  std::vector<double> masses;  // size n, positive, sums to 1 (1e-12)
  std::vector<double> values;  // n*n row-major

  double at(int i, int j) const { return values[static_cast<size_t>(i) * n + j]; }
  double& at(int i, int j) { return values[static_cast<size_t>(i) * n + j]; }

  static step_kernel uniform(int n, double fill = 0.0);
  static step_kernel with_masses(std::vector<double> masses, double fill = 0.0);

  void validate() const;    // throws config_error on bad masses/sizes
  double sup_norm() const;  // max |value|

  static step_kernel load(const std::string& path);
  void save(const std::string& path) const;
};

// |integral of k over S x T| for explicit label sets; the witness value every
// cut-norm routine returns is recomputable through this single function.
double rectangle_sum(const step_kernel& k, const std::vector<int>& rows,
                     const std::vector<int>& cols);

// k1 - k2 on a shared label space (masses must agree to 1e-12).
step_kernel kernel_difference(const step_kernel& k1, const step_kernel& k2);

}  // namespace coweave
