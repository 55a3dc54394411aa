#include "coweave/meanfield/triplet.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "coweave/core/csv.hpp"
#include "coweave/core/error.hpp"

namespace coweave {

void step_triplet::validate() const {
    if (n_labels < 1) throw config_error("step_triplet: need at least one label");
    if (dim < 1) throw config_error("step_triplet: dimension must be positive");
    if (masses.size() != static_cast<std::size_t>(n_labels) ||
        states.size() != static_cast<std::size_t>(n_labels) * static_cast<std::size_t>(dim) ||
        kernel.size() != static_cast<std::size_t>(n_labels) * static_cast<std::size_t>(n_labels)) {
        throw config_error("step_triplet: field sizes inconsistent with n_labels/dim");
    }
    double sum = 0.0;
    for (double m : masses) {
        if (!(m > 0.0) || !std::isfinite(m))
            throw config_error("step_triplet: masses must be positive and finite");
        sum += m;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
        throw config_error("step_triplet: masses sum to " + std::to_string(sum));
    for (double x : states)
        if (!std::isfinite(x)) throw config_error("step_triplet: non-finite state");
    for (double w : kernel)
        if (!std::isfinite(w)) throw config_error("step_triplet: non-finite kernel value");
}

step_kernel step_triplet::as_step_kernel() const {
    step_kernel k;
    k.n = n_labels;
    k.masses = masses;
    k.values = kernel;
    return k;
}

step_triplet step_triplet::permuted(const std::vector<int>& perm) const {
    if (perm.size() != static_cast<std::size_t>(n_labels))
        throw config_error("step_triplet::permuted: permutation size mismatch");
    step_triplet out;
    out.n_labels = n_labels;
    out.dim = dim;
    out.masses.resize(masses.size());
    out.states.resize(states.size());
    out.kernel.resize(kernel.size());
    for (int i = 0; i < n_labels; ++i) {
        const int p = perm[static_cast<std::size_t>(i)];
        out.masses[static_cast<std::size_t>(i)] = masses[static_cast<std::size_t>(p)];
        for (int c = 0; c < dim; ++c) {
            out.states[static_cast<std::size_t>(i) * dim + c] =
                states[static_cast<std::size_t>(p) * dim + c];
        }
        for (int j = 0; j < n_labels; ++j) {
            const int q = perm[static_cast<std::size_t>(j)];
            out.kernel[static_cast<std::size_t>(i) * n_labels + j] = kernel_at(p, q);
        }
    }
    return out;
}

void step_triplet::save(const std::string& path) const {
    validate();
    std::ostringstream os;
    os << "n_labels,dim\n" << n_labels << ',' << dim << '\n';
    for (int m = 0; m < n_labels; ++m) {
        if (m) os << ',';
        os << format_double(masses[static_cast<std::size_t>(m)]);
    }
    os << '\n';
    for (int m = 0; m < n_labels; ++m) {
        for (int c = 0; c < dim; ++c) {
            if (c) os << ',';
            os << format_double(states[static_cast<std::size_t>(m) * dim + c]);
        }
        os << '\n';
    }
    for (int i = 0; i < n_labels; ++i) {
        for (int j = 0; j < n_labels; ++j) {
            if (j) os << ',';
            os << format_double(kernel_at(i, j));
        }
        os << '\n';
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write file '" + path + "'");
    out << os.str();
}

step_triplet step_triplet::load(const std::string& path) {
    const csv_table t = read_csv(path);
    if (t.header.size() != 2 || t.header[0] != "n_labels" || t.header[1] != "dim")
        throw config_error("triplet '" + path + "': missing n_labels,dim header");
    if (t.rows.empty()) throw config_error("triplet '" + path + "': no data");
    const int n = static_cast<int>(t.as_double(0, 0));
    const int d = static_cast<int>(t.as_double(0, 1));
    if (n < 1 || d < 1) throw config_error("triplet '" + path + "': bad n_labels/dim");
    const std::size_t expect = 1 + 1 + static_cast<std::size_t>(n) + static_cast<std::size_t>(n);
    if (t.rows.size() != expect)
        throw config_error("triplet '" + path + "': expected " + std::to_string(expect) +
                           " rows after the header, found " + std::to_string(t.rows.size()));
    step_triplet out;
    out.n_labels = n;
    out.dim = d;
    if (t.rows[1].size() != static_cast<std::size_t>(n))
        throw config_error("triplet '" + path + "': masses row width mismatch");
    out.masses.resize(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m) out.masses[static_cast<std::size_t>(m)] = t.as_double(1, m);
    out.states.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(d));
    for (int m = 0; m < n; ++m) {
        const std::size_t r = 2 + static_cast<std::size_t>(m);
        if (t.rows[r].size() != static_cast<std::size_t>(d))
            throw config_error("triplet '" + path + "': state row width mismatch");
        for (int c = 0; c < d; ++c)
            out.states[static_cast<std::size_t>(m) * d + c] = t.as_double(r, c);
    }
    out.kernel.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const std::size_t r = 2 + static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
        if (t.rows[r].size() != static_cast<std::size_t>(n))
            throw config_error("triplet '" + path + "': kernel row width mismatch");
        for (int j = 0; j < n; ++j)
            out.kernel[static_cast<std::size_t>(i) * n + j] = t.as_double(r, j);
    }
    out.validate();
    return out;
}

step_triplet step_triplet::uniform(int n_labels, int dim) {
    step_triplet t;
    t.n_labels = n_labels;
    t.dim = dim;
    t.masses.assign(static_cast<std::size_t>(n_labels), 1.0 / n_labels);
    t.states.assign(static_cast<std::size_t>(n_labels) * static_cast<std::size_t>(dim), 0.0);
    t.kernel.assign(static_cast<std::size_t>(n_labels) * static_cast<std::size_t>(n_labels),
                    0.0);
    return t;
}

}  // namespace coweave
