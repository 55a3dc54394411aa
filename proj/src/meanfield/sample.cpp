#include "coweave/meanfield/sample.hpp"

namespace coweave {

mixture_sample sample_mixture(const step_triplet& source, const mixture_spec& mix,
                              const counter_rng& rng, std::uint64_t entity_base) {
    source.validate();
    mix.validate(source.masses);

    mixture_sample out;
    out.labels = sample_labels(mix, rng, entity_base);
    const int n = mix.n_rows;
    const int d = source.dim;
    out.ensemble = particle_ensemble::make(n, d);
    for (int i = 0; i < n; ++i) {
        const int li = out.labels[static_cast<std::size_t>(i)];
        for (int c = 0; c < d; ++c) {
            out.ensemble.states[static_cast<std::size_t>(i) * d + c] = source.state_at(li)[c];
        }
        for (int j = 0; j < n; ++j) {
            const int lj = out.labels[static_cast<std::size_t>(j)];
            out.ensemble.weights[static_cast<std::size_t>(i) * n + j] = source.kernel_at(li, lj);
        }
    }
    out.ensemble.w0_sup = out.ensemble.weight_sup();
    return out;
}

}  // namespace coweave
