#include "coweave/graphon/sample.hpp"

#include <string>

#include "coweave/core/error.hpp"

namespace coweave {

sampled_kernel sample_kernel(const step_kernel& k, const mixture_spec& mix,
                             const counter_rng& rng, std::uint64_t entity_base) {
    k.validate();
    mix.validate(k.masses);
    const int n = mix.n_rows;

    sampled_kernel out;
    out.labels = sample_labels(mix, rng, entity_base);

    out.kernel = step_kernel::uniform(n);
    for (int i = 0; i < n; ++i) {
        const int li = out.labels[static_cast<std::size_t>(i)];
        for (int j = 0; j < n; ++j) {
            const int lj = out.labels[static_cast<std::size_t>(j)];
            out.kernel.values[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                              static_cast<std::size_t>(j)] = k.at(li, lj);
        }
    }
    return out;
}

}  // namespace coweave
