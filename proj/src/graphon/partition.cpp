#include "coweave/graphon/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>

namespace coweave {

std::vector<double> label_partition::class_masses(const std::vector<double>& masses) const {
  std::vector<double> out(static_cast<size_t>(n_classes), 0.0);
  for (int i = 0; i < n_labels; ++i) out[static_cast<size_t>(class_of[static_cast<size_t>(i)])] += masses[static_cast<size_t>(i)];
  return out;
}

bool label_partition::is_equipartition(const std::vector<double>& masses) const {
  const auto cm = class_masses(masses);
  double lo = cm.empty() ? 0.0 : cm[0], hi = lo;
  for (double m : cm) {
    lo = std::fmin(lo, m);
    hi = std::fmax(hi, m);
  }
  return (hi - lo) <= 1.0 / static_cast<double>(n_labels) + 1e-12;
}

namespace {

// Block sums of mass-weighted values and block mass products.
void block_means(const step_kernel& k, const label_partition& p, std::vector<double>& mean) {
  const int m = p.n_classes;
  std::vector<double> wsum(static_cast<size_t>(m) * m, 0.0);
  const auto cm = p.class_masses(k.masses);
  for (int i = 0; i < k.n; ++i) {
    const int ci = p.class_of[static_cast<size_t>(i)];
    const double mi = k.masses[static_cast<size_t>(i)];
    for (int j = 0; j < k.n; ++j) {
      wsum[static_cast<size_t>(ci) * m + p.class_of[static_cast<size_t>(j)]] +=
          mi * k.masses[static_cast<size_t>(j)] * k.at(i, j);
    }
  }
  mean.assign(static_cast<size_t>(m) * m, 0.0);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      const double mass = cm[static_cast<size_t>(a)] * cm[static_cast<size_t>(b)];
      mean[static_cast<size_t>(a) * m + b] = mass > 0.0 ? wsum[static_cast<size_t>(a) * m + b] / mass : 0.0;
    }
  }
}

}  // namespace

step_kernel project_kernel(const step_kernel& k, const label_partition& p) {
  std::vector<double> mean;
  block_means(k, p, mean);
  step_kernel out = k;
  for (int i = 0; i < k.n; ++i) {
    for (int j = 0; j < k.n; ++j) {
      out.at(i, j) = mean[static_cast<size_t>(p.class_of[static_cast<size_t>(i)]) * p.n_classes +
                          p.class_of[static_cast<size_t>(j)]];
    }
  }
  return out;
}

step_kernel quotient_kernel(const step_kernel& k, const label_partition& p) {
  std::vector<double> mean;
  block_means(k, p, mean);
  step_kernel out;
  out.n = p.n_classes;
  out.masses = p.class_masses(k.masses);
  out.values = mean;
  out.validate();
  return out;
}

regularity_result weak_regularity_partition(const step_kernel& k, int m_target, int restarts,
                                            const counter_rng& rng) {
  k.validate();
  if (m_target < 1 || m_target > k.n) {
    throw config_error("weak_regularity_partition: m_target must be in [1, n]");
  }

  label_partition p;
  p.n_labels = k.n;
  p.n_classes = 1;
  p.class_of.assign(static_cast<size_t>(k.n), 0);

  int rounds = 0;
  const int max_rounds = 32;
  while (p.n_classes < m_target && rounds < max_rounds) {
    const step_kernel resid = kernel_difference(k, project_kernel(k, p));
    const cut_witness w =
        cut_norm_heuristic(resid, restarts, counter_rng(rng.derive(static_cast<std::uint64_t>(rounds), 0,
                                                                   rng_role::witness)));
    if (w.value <= 1e-13) break;  // kernel already constant on the blocks
    // Split every class by membership in S and in T.
    std::vector<char> in_s(static_cast<size_t>(k.n), 0), in_t(static_cast<size_t>(k.n), 0);
    for (int i : w.rows) in_s[static_cast<size_t>(i)] = 1;
    for (int j : w.cols) in_t[static_cast<size_t>(j)] = 1;
    std::map<std::tuple<int, int, int>, int> relabel;
    std::vector<int> next(static_cast<size_t>(k.n));
    for (int i = 0; i < k.n; ++i) {
      const auto key = std::make_tuple(p.class_of[static_cast<size_t>(i)], static_cast<int>(in_s[static_cast<size_t>(i)]),
                                       static_cast<int>(in_t[static_cast<size_t>(i)]));
      auto it = relabel.find(key);
      if (it == relabel.end()) it = relabel.emplace(key, static_cast<int>(relabel.size())).first;
      next[static_cast<size_t>(i)] = it->second;
    }
    p.class_of = next;
    p.n_classes = static_cast<int>(relabel.size());
    ++rounds;
  }

  // Balance to exactly m_target classes of near-equal mass. Labels are filled
  // in (class, label) order so refined classes are only split at bucket
  // boundaries; if the refinement already produced an m_target equipartition
  // it is kept as-is.
  if (!(p.n_classes == m_target && p.is_equipartition(k.masses))) {
    std::vector<int> order(static_cast<size_t>(k.n));
    for (int i = 0; i < k.n; ++i) order[static_cast<size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return p.class_of[static_cast<size_t>(a)] < p.class_of[static_cast<size_t>(b)];
    });
    label_partition balanced;
    balanced.n_labels = k.n;
    balanced.n_classes = m_target;
    balanced.class_of.assign(static_cast<size_t>(k.n), m_target - 1);
    double filled = 0.0;
    int bucket = 0;
    for (int idx : order) {
      const double target = static_cast<double>(bucket + 1) / m_target;
      if (filled >= target - 1e-15 && bucket + 1 < m_target) ++bucket;
      balanced.class_of[static_cast<size_t>(idx)] = bucket;
      filled += k.masses[static_cast<size_t>(idx)];
    }
    p = balanced;
  }

  regularity_result out;
  out.partition = p;
  out.projected = project_kernel(k, p);
  const step_kernel resid = kernel_difference(k, out.projected);
  out.residual_cut =
      cut_norm_heuristic(resid, restarts, counter_rng(rng.derive(0xFFEEu, 0, rng_role::witness))).value;
  out.error_bound = m_target > 1
                        ? 8.0 * k.sup_norm() / std::sqrt(std::log(static_cast<double>(m_target)))
                        : 2.0 * k.sup_norm();
  out.refinement_rounds = rounds;
  return out;
}

}  // namespace coweave
