#pragma once

// Finite state-weight triplet: a label measure, one state per label, and a
// weight kernel on label pairs.  This is the object every metric in
// coweave compares and every mixture sampler draws from.

#include <string>
#include <vector>

#include "coweave/graphon/kernel.hpp"

namespace coweave {

struct step_triplet {
    int n_labels = 0;
    int dim = 1;
    std::vector<double> masses;  // sums to 1 within 1e-12
    std::vector<double> states;  // n_labels x dim, row-major
    std::vector<double> kernel;  // n_labels x n_labels, row-major

    double kernel_at(int i, int j) const {
        return kernel[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_labels) +
                      static_cast<std::size_t>(j)];
    }
    const double* state_at(int i) const {
        return &states[static_cast<std::size_t>(i) * static_cast<std::size_t>(dim)];
    }

    // Positive masses summing to 1 within 1e-12; finite states and kernel.
    void validate() const;

    // The weight kernel together with the label masses.
    step_kernel as_step_kernel() const;

    // Relabeled copy: label i of the result is label perm[i] of *this.
    step_triplet permuted(const std::vector<int>& perm) const;

    static step_triplet uniform(int n_labels, int dim = 1);

    // CSV round trip (docs/file-formats.md): header row "n_labels,dim", one
    // value row, one masses row, n state rows of d entries, n kernel rows.
    void save(const std::string& path) const;
    static step_triplet load(const std::string& path);
};

}  // namespace coweave
