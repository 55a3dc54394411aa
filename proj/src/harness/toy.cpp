#include "coweave/harness/toy.hpp"

#include "coweave/core/error.hpp"
#include "coweave/metrics/gamma.hpp"

namespace coweave {

namespace {

step_triplet periodic_states(int n) {
    step_triplet t = step_triplet::uniform(n, 1);
    const int period = n / 6;
    for (int i = 0; i < n; ++i) {
        const int residue = i % period;
        t.states[static_cast<std::size_t>(i)] = (residue % 2 == 0) ? 0.7 : 2.3;
    }
    return t;
}

}  // namespace

toy_pair make_toy_pair(int n) {
    if (n < 6 || n % 6 != 0)
        throw config_error("toy pair: n must be a positive multiple of 6, got " +
                           std::to_string(n));
    toy_pair out;
    out.bipartite = periodic_states(n);
    out.cycle = periodic_states(n);
    const int half = n / 2;
    const int third = n / 3;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const std::size_t p = static_cast<std::size_t>(i) * n + j;
            out.bipartite.kernel[p] = (i < half) != (j < half) ? 2.0 : 0.0;
            out.cycle.kernel[p] = ((i / third + 1) % 3 == j / third) ? 3.0 : 0.0;
        }
    }
    out.bipartite.validate();
    out.cycle.validate();
    return out;
}

coupling toy_periodic_coupling(int n) {
    if (n < 6 || n % 6 != 0)
        throw config_error("toy coupling: n must be a positive multiple of 6, got " +
                           std::to_string(n));
    return residue_coupling(n, n / 6);
}

}  // namespace coweave
