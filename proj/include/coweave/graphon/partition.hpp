// Weak-regularity machinery: project a step kernel onto a label partition
// (block averaging) and greedily build an equitable partition whose
// projection approximates the kernel in cut norm.
#pragma once

#include <vector>

#include "coweave/core/rng.hpp"
#include "coweave/graphon/cut_norm.hpp"
#include "coweave/graphon/kernel.hpp"

namespace coweave {

struct label_partition {
  int n_labels = 0;
  int n_classes = 0;
  std::vector<int> class_of;  // size n_labels

  std::vector<double> class_masses(const std::vector<double>& masses) const;
  // True iff all class masses lie within 1/n_labels of each other.
  bool is_equipartition(const std::vector<double>& masses) const;
};

// Mass-weighted block average of k on the partition, returned on the original
// label space (value at (i, j) = block mean of (class i, class j)).
step_kernel project_kernel(const step_kernel& k, const label_partition& p);

// The same averages on the quotient space (one label per class).
step_kernel quotient_kernel(const step_kernel& k, const label_partition& p);

struct regularity_result {
  label_partition partition;
  step_kernel projected;          // on the original label space
  double residual_cut = 0.0;      // heuristic cut norm of k - projected
  double error_bound = 0.0;       // 8 * sup|k| / sqrt(log m_target)
  int refinement_rounds = 0;
};

// Greedy Frieze-Kannan scheme: repeatedly split classes along heuristic cut
// witnesses of the residual, then balance into exactly m_target classes of
// near-equal mass (splitting the fill order only at bucket boundaries).
regularity_result weak_regularity_partition(const step_kernel& k, int m_target, int restarts,
                                            const counter_rng& rng);

}  // namespace coweave
