#include "coweave/core/mixture.hpp"

#include <cmath>
#include <string>

#include "coweave/core/error.hpp"

namespace coweave {

void mixture_spec::validate(const std::vector<double>& masses, double tol) const {
    if (n_rows < 1 || n_labels < 1) throw config_error("mixture_spec: empty");
    if (static_cast<int>(masses.size()) != n_labels)
        throw config_error("mixture_spec: label count mismatch");
    if (rows.size() != static_cast<std::size_t>(n_rows) * static_cast<std::size_t>(n_labels))
        throw config_error("mixture_spec: row storage size mismatch");
    for (int i = 0; i < n_rows; ++i) {
        double sum = 0.0;
        for (int m = 0; m < n_labels; ++m) {
            const double p = at(i, m);
            if (!(p >= 0.0) || !std::isfinite(p))
                throw config_error("mixture_spec: row " + std::to_string(i) +
                                   " has a negative or non-finite entry");
            sum += p;
        }
        if (std::fabs(sum - 1.0) > 1e-12)
            throw config_error("mixture_spec: row " + std::to_string(i) + " sums to " +
                               std::to_string(sum));
    }
    for (int m = 0; m < n_labels; ++m) {
        double avg = 0.0;
        for (int i = 0; i < n_rows; ++i) avg += at(i, m);
        avg /= n_rows;
        if (std::fabs(avg - masses[static_cast<std::size_t>(m)]) > tol) {
            throw config_error("mixture_spec: rows average to " + std::to_string(avg) +
                               " on label " + std::to_string(m) + ", expected " +
                               std::to_string(masses[static_cast<std::size_t>(m)]));
        }
    }
}

mixture_spec mixture_spec::iid(int n_rows, const std::vector<double>& masses) {
    mixture_spec mix;
    mix.n_rows = n_rows;
    mix.n_labels = static_cast<int>(masses.size());
    mix.rows.resize(static_cast<std::size_t>(n_rows) * masses.size());
    for (int i = 0; i < n_rows; ++i)
        for (std::size_t m = 0; m < masses.size(); ++m)
            mix.rows[static_cast<std::size_t>(i) * masses.size() + m] = masses[m];
    return mix;
}

mixture_spec mixture_spec::dirac(int n_labels) {
    mixture_spec mix;
    mix.n_rows = n_labels;
    mix.n_labels = n_labels;
    mix.rows.assign(static_cast<std::size_t>(n_labels) * static_cast<std::size_t>(n_labels),
                    0.0);
    for (int i = 0; i < n_labels; ++i)
        mix.rows[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_labels) +
                 static_cast<std::size_t>(i)] = 1.0;
    return mix;
}

std::vector<int> sample_labels(const mixture_spec& mix, const counter_rng& rng,
                               std::uint64_t entity_base) {
    std::vector<int> labels(static_cast<std::size_t>(mix.n_rows));
    for (int i = 0; i < mix.n_rows; ++i) {
        const double u =
            rng.uniform(entity_base + static_cast<std::uint64_t>(i), 0, rng_role::label, 0);
        double acc = 0.0;
        int pick = -1;
        int last_positive = 0;
        for (int m = 0; m < mix.n_labels; ++m) {
            const double p = mix.at(i, m);
            if (p > 0.0) last_positive = m;
            acc += p;
            if (pick < 0 && u <= acc) pick = m;
        }
        labels[static_cast<std::size_t>(i)] = pick < 0 ? last_positive : pick;
    }
    return labels;
}

mixture_spec mixture_spec::stratified(int n_rows, int n_labels) {
    if (n_labels < 1 || n_rows < n_labels || n_rows % n_labels != 0)
        throw config_error("mixture_spec::stratified: rows must be a positive multiple "
                           "of the label count");
    const int c = n_rows / n_labels;
    mixture_spec mix;
    mix.n_rows = n_rows;
    mix.n_labels = n_labels;
    mix.rows.assign(static_cast<std::size_t>(n_rows) * static_cast<std::size_t>(n_labels),
                    0.0);
    for (int i = 0; i < n_rows; ++i)
        mix.rows[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_labels) +
                 static_cast<std::size_t>(i / c)] = 1.0;
    return mix;
}

}  // namespace coweave
