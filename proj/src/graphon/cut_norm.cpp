#include "coweave/graphon/cut_norm.hpp"

#include <cmath>
#include <cstring>
#include <string>

namespace coweave {

namespace {

std::vector<int> bits_to_indices(std::uint32_t mask, int n) {
  std::vector<int> out;
  for (int i = 0; i < n; ++i) {
    if (mask & (1u << i)) out.push_back(i);
  }
  return out;
}

// Column sets maximizing the positive / negative column-sum totals.
void greedy_columns(const std::vector<double>& col, int n, std::vector<int>& pos_cols,
                    std::vector<int>& neg_cols) {
  pos_cols.clear();
  neg_cols.clear();
  for (int j = 0; j < n; ++j) {
    if (col[static_cast<size_t>(j)] > 0.0) pos_cols.push_back(j);
    if (col[static_cast<size_t>(j)] < 0.0) neg_cols.push_back(j);
  }
}

}  // namespace

cut_witness cut_norm_exact(const step_kernel& k, int max_n) {
  k.validate();
  const int n = k.n;
  if (n > max_n || n > 31) {
    throw resource_error("cut_norm_exact: n = " + std::to_string(n) + " exceeds the enumeration cap " +
                         std::to_string(max_n) + "; use cut_norm_heuristic or cut_norm_sampling_bound");
  }
  // weighted[i][j] = m_i * k_ij * m_j, the contribution of row i to column j.
  std::vector<double> weighted(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      weighted[static_cast<size_t>(i) * n + j] =
          k.masses[static_cast<size_t>(i)] * k.at(i, j) * k.masses[static_cast<size_t>(j)];
    }
  }

  std::vector<double> col(static_cast<size_t>(n), 0.0);
  double pos = 0.0, neg = 0.0;  // sum of positive / -negative parts of col[]
  double best = 0.0;
  std::uint32_t best_mask = 0;
  int best_sign = +1;

  // Gray-code enumeration of row subsets; subset(g) = g ^ (g >> 1).
  const std::uint64_t total = 1ull << n;
  std::uint32_t mask = 0;
  for (std::uint64_t g = 1; g < total; ++g) {
    const int flip = static_cast<int>(__builtin_ctzll(g));
    const std::uint32_t flip_bit = 1u << flip;
    const double sgn = (mask & flip_bit) ? -1.0 : 1.0;
    mask ^= flip_bit;
    const double* row = &weighted[static_cast<size_t>(flip) * n];
    for (int j = 0; j < n; ++j) {
      const double old_c = col[static_cast<size_t>(j)];
      const double new_c = old_c + sgn * row[j];
      col[static_cast<size_t>(j)] = new_c;
      pos += std::fmax(new_c, 0.0) - std::fmax(old_c, 0.0);
      neg += std::fmax(-new_c, 0.0) - std::fmax(-old_c, 0.0);
    }
    if (pos > best) {
      best = pos;
      best_mask = mask;
      best_sign = +1;
    }
    if (neg > best) {
      best = neg;
      best_mask = mask;
      best_sign = -1;
    }
  }

  // Rebuild the winning column sums and return a clean, recomputable witness.
  cut_witness w;
  w.rows = bits_to_indices(best_mask, n);
  std::fill(col.begin(), col.end(), 0.0);
  for (int i : w.rows) {
    const double* row = &weighted[static_cast<size_t>(i) * n];
    for (int j = 0; j < n; ++j) col[static_cast<size_t>(j)] += row[j];
  }
  std::vector<int> pos_cols, neg_cols;
  greedy_columns(col, n, pos_cols, neg_cols);
  w.cols = best_sign > 0 ? pos_cols : neg_cols;
  w.value = rectangle_sum(k, w.rows, w.cols);
  return w;
}

cut_witness cut_norm_heuristic(const step_kernel& k, int restarts, const counter_rng& rng) {
  k.validate();
  const int n = k.n;
  std::vector<double> weighted(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      weighted[static_cast<size_t>(i) * n + j] =
          k.masses[static_cast<size_t>(i)] * k.at(i, j) * k.masses[static_cast<size_t>(j)];
    }
  }

  cut_witness best;  // value 0 with empty sets is always feasible
  std::vector<char> in_t(static_cast<size_t>(n)), in_s(static_cast<size_t>(n));
  std::vector<double> row_margin(static_cast<size_t>(n)), col_margin(static_cast<size_t>(n));

  for (int r = 0; r < restarts; ++r) {
    for (double phase : {+1.0, -1.0}) {
      // Random initial column set from the restart's private stream.
      for (int j = 0; j < n; ++j) {
        in_t[static_cast<size_t>(j)] =
            (rng.bits(static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(j), rng_role::witness,
                      phase > 0 ? 0u : 1u) &
             1u) != 0;
      }
      double value = -1.0;
      for (int sweep = 0; sweep < 64; ++sweep) {
        // S step: include rows whose marginal contribution is >= 0.
        for (int i = 0; i < n; ++i) {
          double acc = 0.0;
          const double* row = &weighted[static_cast<size_t>(i) * n];
          for (int j = 0; j < n; ++j) {
            if (in_t[static_cast<size_t>(j)]) acc += row[j];
          }
          row_margin[static_cast<size_t>(i)] = phase * acc;
        }
        for (int i = 0; i < n; ++i) in_s[static_cast<size_t>(i)] = row_margin[static_cast<size_t>(i)] >= 0.0;
        // T step: same for columns given S.
        std::fill(col_margin.begin(), col_margin.end(), 0.0);
        for (int i = 0; i < n; ++i) {
          if (!in_s[static_cast<size_t>(i)]) continue;
          const double* row = &weighted[static_cast<size_t>(i) * n];
          for (int j = 0; j < n; ++j) col_margin[static_cast<size_t>(j)] += row[j];
        }
        double new_value = 0.0;
        bool changed = false;
        for (int j = 0; j < n; ++j) {
          const bool take = phase * col_margin[static_cast<size_t>(j)] >= 0.0;
          if (take != (in_t[static_cast<size_t>(j)] != 0)) changed = true;
          in_t[static_cast<size_t>(j)] = take;
          if (take) new_value += phase * col_margin[static_cast<size_t>(j)];
        }
        value = new_value;
        if (!changed) break;
      }
      if (value > best.value) {
        cut_witness w;
        for (int i = 0; i < n; ++i) {
          if (in_s[static_cast<size_t>(i)]) w.rows.push_back(i);
        }
        for (int j = 0; j < n; ++j) {
          if (in_t[static_cast<size_t>(j)]) w.cols.push_back(j);
        }
        w.value = rectangle_sum(k, w.rows, w.cols);
        if (w.value > best.value) best = w;
      }
    }
  }
  return best;
}

sampling_bound cut_norm_sampling_bound(const step_kernel& k, int q, int trials,
                                       const counter_rng& rng) {
  k.validate();
  if (q < 1 || q > 12) throw config_error("cut_norm_sampling_bound: q must be in [1, 12]");
  if (trials < 1) throw config_error("cut_norm_sampling_bound: trials must be >= 1");
  const int n = k.n;
  if (n > 1024) {
    throw resource_error("cut_norm_sampling_bound: n = " + std::to_string(n) +
                         " exceeds the subset-enumeration cap 1024");
  }
  const double sup = k.sup_norm();

  // Cumulative mass for label draws.
  std::vector<double> cum(static_cast<size_t>(n));
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += k.masses[static_cast<size_t>(i)];
    cum[static_cast<size_t>(i)] = acc;
  }
  auto draw_label = [&](std::uint64_t entity, std::uint64_t step, std::uint32_t slot) {
    const double u = rng.uniform(entity, step, rng_role::witness, slot);
    int lo = 0, hi = n - 1;
    while (lo < hi) {
      const int mid = (lo + hi) / 2;
      if (cum[static_cast<size_t>(mid)] >= u) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    return lo;
  };

  const std::uint64_t subsets = 1ull << q;
  std::vector<int> q1(static_cast<size_t>(q)), q2(static_cast<size_t>(q));
  std::vector<double> rowsum(static_cast<size_t>(n)), colsum_sample(static_cast<size_t>(n));
  std::vector<double> colsum(static_cast<size_t>(n));
  // T(R1) column index lists for every subset R1 of the sampled rows Q1.
  std::vector<std::vector<int>> t_cols(static_cast<size_t>(subsets));

  double best_mean = 0.0, best_stderr = 0.0;
  for (int side = 0; side < 2; ++side) {
    const double sgn = side == 0 ? 1.0 : -1.0;
    double sum = 0.0, sum_sq = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
      const std::uint64_t ent = (static_cast<std::uint64_t>(side) << 32) | static_cast<std::uint32_t>(trial);
      for (int a = 0; a < q; ++a) {
        q1[static_cast<size_t>(a)] = draw_label(ent, 0, static_cast<std::uint32_t>(a));
        q2[static_cast<size_t>(a)] = draw_label(ent, 1, static_cast<std::uint32_t>(a));
      }
      // Enumerate R1 subsets of Q1 (sampled rows); T(R1) = {j : sum over R1 > 0}.
      std::fill(colsum_sample.begin(), colsum_sample.end(), 0.0);
      std::uint32_t r1 = 0;
      t_cols[0].clear();  // empty R1 -> strictly-positive test fails everywhere
      for (std::uint64_t g = 1; g < subsets; ++g) {
        const int flip = static_cast<int>(__builtin_ctzll(g));
        const std::uint32_t bit = 1u << flip;
        const double s = (r1 & bit) ? -1.0 : 1.0;
        r1 ^= bit;
        const int row = q1[static_cast<size_t>(flip)];
        for (int j = 0; j < n; ++j) colsum_sample[static_cast<size_t>(j)] += s * sgn * k.at(row, j);
        auto& cols = t_cols[r1];
        cols.clear();
        for (int j = 0; j < n; ++j) {
          if (colsum_sample[static_cast<size_t>(j)] > 0.0) cols.push_back(j);
        }
      }
      // Enumerate R2 subsets of Q2 (sampled columns) -> row sets A, then the
      // max of the mass-weighted rectangle sums over all (R1, R2) pairs.
      double best_val = 0.0;
      std::fill(rowsum.begin(), rowsum.end(), 0.0);
      std::uint32_t r2 = 0;
      for (std::uint64_t g = 1; g < subsets; ++g) {
        const int flip = static_cast<int>(__builtin_ctzll(g));
        const std::uint32_t bit = 1u << flip;
        const double s = (r2 & bit) ? -1.0 : 1.0;
        r2 ^= bit;
        const int col = q2[static_cast<size_t>(flip)];
        for (int i = 0; i < n; ++i) rowsum[static_cast<size_t>(i)] += s * sgn * k.at(i, col);
        // A = rows with positive sampled sum; colsum[j] = mass-weighted sum over A.
        std::fill(colsum.begin(), colsum.end(), 0.0);
        for (int i = 0; i < n; ++i) {
          if (rowsum[static_cast<size_t>(i)] <= 0.0) continue;
          const double mi = k.masses[static_cast<size_t>(i)];
          for (int j = 0; j < n; ++j) {
            colsum[static_cast<size_t>(j)] += mi * sgn * k.at(i, j) * k.masses[static_cast<size_t>(j)];
          }
        }
        for (std::uint64_t r1_mask = 0; r1_mask < subsets; ++r1_mask) {
          double val = 0.0;
          for (int j : t_cols[r1_mask]) val += colsum[static_cast<size_t>(j)];
          if (val > best_val) best_val = val;
        }
      }
      sum += best_val;
      sum_sq += best_val * best_val;
    }
    const double mean = sum / trials;
    const double var = trials > 1 ? std::fmax(0.0, (sum_sq - sum * sum / trials) / (trials - 1)) : 0.0;
    const double se = trials > 1 ? std::sqrt(var / trials) : 0.0;
    if (mean > best_mean) {
      best_mean = mean;
      best_stderr = se;
    }
  }

  sampling_bound out;
  out.q = q;
  out.trials = trials;
  out.mean_term = best_mean;
  out.stderr_term = best_stderr;
  out.slack = 2.0 * sup / std::sqrt(static_cast<double>(q));
  out.bound = out.mean_term + out.slack;
  return out;
}

double op_norm_inf_to_one(const step_kernel& k, int max_n) {
  k.validate();
  const int n = k.n;
  if (n > max_n) {
    throw resource_error("op_norm_inf_to_one: " + std::to_string(n) +
                         " labels exceeds the exact enumeration limit of " +
                         std::to_string(max_n));
  }
  // row_img[x] = sum_y m_y k(x,y) psi_y, updated incrementally along a Gray
  // walk over psi so each step costs O(n).
  std::vector<double> psi(static_cast<std::size_t>(n), 1.0);
  std::vector<double> row_img(static_cast<std::size_t>(n), 0.0);
  for (int x = 0; x < n; ++x) {
    double acc = 0.0;
    for (int y = 0; y < n; ++y) acc += k.masses[static_cast<std::size_t>(y)] * k.at(x, y);
    row_img[static_cast<std::size_t>(x)] = acc;
  }
  auto objective = [&]() {
    double total = 0.0;
    for (int x = 0; x < n; ++x) {
      total += k.masses[static_cast<std::size_t>(x)] * std::fabs(row_img[static_cast<std::size_t>(x)]);
    }
    return total;
  };
  auto refresh = [&]() {
    for (int x = 0; x < n; ++x) {
      double acc = 0.0;
      for (int y = 0; y < n; ++y) {
        acc += psi[static_cast<std::size_t>(y)] * k.masses[static_cast<std::size_t>(y)] * k.at(x, y);
      }
      row_img[static_cast<std::size_t>(x)] = acc;
    }
  };
  double best = objective();
  const std::uint64_t steps = (n >= 64) ? 0 : ((std::uint64_t{1} << n) - 1);
  for (std::uint64_t g = 1; g <= steps; ++g) {
    // Gray code: bit that flips between g-1 and g is the lowest set bit of g.
    int flip = 0;
    std::uint64_t bit = g & (~g + 1);
    while ((bit >> flip) != 1) ++flip;
    const double delta = -2.0 * psi[static_cast<std::size_t>(flip)];
    psi[static_cast<std::size_t>(flip)] += delta;
    const double my = k.masses[static_cast<std::size_t>(flip)];
    for (int x = 0; x < n; ++x) {
      row_img[static_cast<std::size_t>(x)] += delta * my * k.at(x, flip);
    }
    // Clear accumulated increment roundoff so the walk stays exact-grade.
    if ((g & 0x3ff) == 0) refresh();
    const double val = objective();
    if (val > best) best = val;
  }
  return best;
}

}  // namespace coweave
