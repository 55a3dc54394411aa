#pragma once

// First Wasserstein distance between weighted point clouds on a flat or
// periodic domain.  Small problems are solved exactly by the transportation
// simplex; above the exact-size cutoff an entropic (Sinkhorn) approximation
// with plan rounding is used and flagged as inexact.

#include <vector>

#include "coweave/core/domain.hpp"
#include "coweave/metrics/transport.hpp"

namespace coweave {

struct w1_result {
    double value = 0.0;
    bool exact = true;       // false => entropic approximation (biased upward)
    bool certified = false;  // simplex optimality certificate (exact path only)
    int iterations = 0;
};

inline constexpr int kExactTransportLimit = 512;

// Point clouds are row-major (n x dom.dim); masses must each sum to 1
// within 1e-9.
w1_result wasserstein1(const std::vector<double>& x1, const std::vector<double>& m1,
                       const std::vector<double>& x2, const std::vector<double>& m2,
                       const domain& dom);

// Exact one-dimensional W1 on the line via the CDF-difference integral;
// cross-check oracle for the simplex path (euclidean geometry only).
double wasserstein1_1d(std::vector<double> x1, std::vector<double> m1,
                       std::vector<double> x2, std::vector<double> m2);

}  // namespace coweave
