#pragma once

// Mixture specification: one probability row per sampled agent over a label
// space.  Valid only when the rows average to the label masses (so that
// sampling reproduces the label measure in expectation).

#include <cstdint>
#include <vector>

#include "coweave/core/rng.hpp"

namespace coweave {

struct mixture_spec {
    int n_rows = 0;    // agents to sample
    int n_labels = 0;  // labels of the source
    std::vector<double> rows;  // n_rows x n_labels, row-major, each row sums to 1

    double at(int i, int m) const {
        return rows[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_labels) +
                    static_cast<std::size_t>(m)];
    }

    // Rows nonnegative, each summing to 1 within 1e-12; column average equal
    // to `masses` within tol (throws config_error otherwise).
    void validate(const std::vector<double>& masses, double tol = 1e-10) const;

    // Every row equals `masses`: independent draws from the label measure.
    static mixture_spec iid(int n_rows, const std::vector<double>& masses);
    // Row i is the point mass at label i (n_rows == n_labels).
    static mixture_spec dirac(int n_labels);
    // Uniform labels only: n_rows = c * n_labels, row i a point mass at
    // label i / c, so each label is drawn exactly c times.
    static mixture_spec stratified(int n_rows, int n_labels);
};

// One label per row by inverse CDF over that row (role `label`, entity =
// entity_base + row, slot 0); the last positive-mass label absorbs rounding
// slack. Shared by kernel-level and triplet-level sampling so both pick
// identical labels from identical seeds.
std::vector<int> sample_labels(const mixture_spec& mix, const counter_rng& rng,
                               std::uint64_t entity_base = 0);

}  // namespace coweave
