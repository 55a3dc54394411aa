#pragma once

// Exact solver for the discrete balanced transportation problem
//   min sum_ij plan[i][j] * cost[i][j]   s.t. row sums = mu, col sums = nu,
// via the transportation (network) simplex with Dantzig pivoting and a
// Bland fallback against degenerate cycling.  The result carries an
// optimality certificate checked from scratch (dual feasibility and
// complementary slackness).

#include <vector>

namespace coweave {

// Row-major coupling between two finite mass vectors.
struct coupling {
    int n1 = 0;
    int n2 = 0;
    std::vector<double> weights;  // n1 * n2, row-major

    double at(int i, int j) const {
        return weights[static_cast<std::size_t>(i) * static_cast<std::size_t>(n2) +
                       static_cast<std::size_t>(j)];
    }
    // Throws config_error if marginals deviate from mu/nu by more than tol.
    void validate(const std::vector<double>& mu, const std::vector<double>& nu,
                  double tol = 1e-9) const;
};

// Independent (product) coupling mu x nu.
coupling product_coupling(const std::vector<double>& mu, const std::vector<double>& nu);

struct transport_result {
    coupling plan;
    double cost = 0.0;
    bool certified = false;  // dual feasibility + complementary slackness verified
    int iterations = 0;
};

// Requires sum(mu) == sum(nu) within 1e-9; the residual imbalance is folded
// into the largest nu entry so the simplex sees an exactly balanced problem.
transport_result solve_transport(const std::vector<double>& mu,
                                 const std::vector<double>& nu,
                                 const std::vector<double>& cost);

}  // namespace coweave
