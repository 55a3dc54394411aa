// Cut norm of step kernels:
//   ||k||_cut = max over label sets S, T of |sum_{i in S, j in T} m_i m_j k_ij|.
//
// Three routines with different contracts:
//  - cut_norm_exact: full row-subset enumeration (2^n, n <= 24) with greedy
//    column completion for both signs; exact up to roundoff.
//  - cut_norm_heuristic: seeded alternating maximization; always a valid
//    lower bound with a recomputable witness.
//  - cut_norm_sampling_bound: randomized one-sided upper estimate built from
//    row/column subsamples plus a 2*sup/sqrt(q) slack term.
#pragma once

#include <cstdint>
#include <vector>

#include "coweave/core/rng.hpp"
#include "coweave/graphon/kernel.hpp"

namespace coweave {

struct cut_witness {
  std::vector<int> rows;  // S
  std::vector<int> cols;  // T
  double value = 0.0;     // |rectangle_sum(k, rows, cols)|, recomputable
};

// Exact cut norm; throws resource_error for n > max_n (default 24) with a
// message pointing at the heuristic/sampling routines.
cut_witness cut_norm_exact(const step_kernel& k, int max_n = 24);

// Alternating maximization from `restarts` random seeds (default 32).
// Tie-break: a label with exactly zero marginal contribution is included.
cut_witness cut_norm_heuristic(const step_kernel& k, int restarts, const counter_rng& rng);

struct sampling_bound {
  double bound = 0.0;      // mean_term + slack, upper-confidence estimate
  double mean_term = 0.0;  // Monte Carlo mean of the subset maxima
  double stderr_term = 0.0;
  double slack = 0.0;      // 2 * sup|k| / sqrt(q)
  int q = 0;
  int trials = 0;
};

// Monte Carlo upper estimate of ||k||_cut from q-subsamples; `trials`
// independent draws per side. Exactness is not guaranteed per draw; the
// slack term makes the estimate an upper bound with high probability.
sampling_bound cut_norm_sampling_bound(const step_kernel& k, int q, int trials,
                                       const counter_rng& rng);

// Exact infinity-to-one operator norm of the kernel acting on sign vectors:
//   max over psi in {-1,+1}^n of sum_x m_x |sum_y m_y k(x,y) psi(y)|.
// Enumerates all 2^n sign vectors; throws resource_error for n > max_n.
// Satisfies ||k||_cut <= op_norm_inf_to_one(k) <= 4 ||k||_cut.
double op_norm_inf_to_one(const step_kernel& k, int max_n = 24);

}  // namespace coweave
