#pragma once

// Fixed-association accumulation primitives for the hot interaction loops.
// The four-lane split is part of the determinism contract: any caller,
// on any thread count, sums a given row in exactly this order.

namespace coweave {

// Two dot products sharing one pass over w: out_a = sum_j w[j]*a[j],
// out_b = sum_j w[j]*b[j], accumulated in four fixed lanes combined as
// (l0+l1)+(l2+l3), then a sequential tail.
inline void lane_dot2(const double* w, const double* a, const double* b, int n, double& out_a,
                      double& out_b) {
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    double b0 = 0.0, b1 = 0.0, b2 = 0.0, b3 = 0.0;
    int j = 0;
    for (; j + 4 <= n; j += 4) {
        a0 += w[j] * a[j];
        a1 += w[j + 1] * a[j + 1];
        a2 += w[j + 2] * a[j + 2];
        a3 += w[j + 3] * a[j + 3];
        b0 += w[j] * b[j];
        b1 += w[j + 1] * b[j + 1];
        b2 += w[j + 2] * b[j + 2];
        b3 += w[j + 3] * b[j + 3];
    }
    double sa = (a0 + a1) + (a2 + a3);
    double sb = (b0 + b1) + (b2 + b3);
    for (; j < n; ++j) {
        sa += w[j] * a[j];
        sb += w[j] * b[j];
    }
    out_a = sa;
    out_b = sb;
}

}  // namespace coweave
