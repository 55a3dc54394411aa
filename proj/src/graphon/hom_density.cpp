#include "coweave/graphon/hom_density.hpp"

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "coweave/core/error.hpp"

namespace coweave {

digraph digraph_edge() { return digraph{2, {{0, 1}}}; }

digraph digraph_path(int len) {
    if (len < 1) throw config_error("digraph_path: need len >= 1");
    digraph f;
    f.n_vertices = len + 1;
    for (int i = 0; i < len; ++i) f.edges.emplace_back(i, i + 1);
    return f;
}

digraph digraph_cycle(int len) {
    if (len < 1) throw config_error("digraph_cycle: need len >= 1");
    digraph f;
    f.n_vertices = len;
    for (int i = 0; i < len; ++i) f.edges.emplace_back(i, (i + 1) % len);
    return f;
}

digraph digraph_complete(int n) {
    if (n < 1) throw config_error("digraph_complete: need n >= 1");
    digraph f;
    f.n_vertices = n;
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v)
            if (u != v) f.edges.emplace_back(u, v);
    return f;
}

namespace {

// Dense table over an ascending scope of graph vertices; the last scope
// variable varies fastest.
struct factor {
    std::vector<int> scope;
    std::vector<double> table;
};

constexpr std::size_t kMaxTableEntries = std::size_t(1) << 24;

std::size_t table_size(std::size_t scope_len, int n_labels) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < scope_len; ++i) {
        if (total > kMaxTableEntries / static_cast<std::size_t>(n_labels)) {
            throw resource_error(
                "hom_density: intermediate table over " + std::to_string(scope_len) +
                " variables with " + std::to_string(n_labels) +
                " labels exceeds the size limit; use a smaller graph or kernel");
        }
        total *= static_cast<std::size_t>(n_labels);
    }
    return total;
}

factor edge_factor(const step_kernel& k, int tail, int head) {
    factor f;
    const std::size_t n = static_cast<std::size_t>(k.n);
    if (tail == head) {
        f.scope = {tail};
        f.table.resize(n);
        for (std::size_t i = 0; i < n; ++i) f.table[i] = k.at(static_cast<int>(i), static_cast<int>(i));
        return f;
    }
    f.scope = {std::min(tail, head), std::max(tail, head)};
    f.table.resize(n * n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            const int u = (tail < head) ? static_cast<int>(a) : static_cast<int>(b);
            const int v = (tail < head) ? static_cast<int>(b) : static_cast<int>(a);
            f.table[a * n + b] = k.at(u, v);
        }
    }
    return f;
}

// Multiplies the given factors and sums out vertex `v` weighted by masses.
factor eliminate(std::vector<factor> group, int v, const step_kernel& k) {
    const int n = k.n;
    std::set<int> scope_union;
    for (const factor& f : group) scope_union.insert(f.scope.begin(), f.scope.end());
    std::vector<int> u_scope(scope_union.begin(), scope_union.end());
    const std::size_t u_len = u_scope.size();
    table_size(u_len, n);  // guard

    std::size_t pv = 0;
    while (pv < u_len && u_scope[pv] != v) ++pv;

    // Strides of each factor's variables inside the joint odometer, and the
    // strides of the reduced table (scope without v).
    std::vector<std::vector<std::size_t>> fstride(group.size(),
                                                  std::vector<std::size_t>(u_len, 0));
    for (std::size_t fi = 0; fi < group.size(); ++fi) {
        const factor& f = group[fi];
        std::size_t stride = 1;
        for (std::size_t p = f.scope.size(); p-- > 0;) {
            const std::size_t pos =
                static_cast<std::size_t>(std::lower_bound(u_scope.begin(), u_scope.end(),
                                                          f.scope[p]) -
                                         u_scope.begin());
            fstride[fi][pos] = stride;
            stride *= static_cast<std::size_t>(n);
        }
    }

    factor out;
    for (int s : u_scope)
        if (s != v) out.scope.push_back(s);
    std::vector<std::size_t> rstride(u_len, 0);
    {
        std::size_t stride = 1;
        for (std::size_t p = u_len; p-- > 0;) {
            if (u_scope[p] == v) continue;
            rstride[p] = stride;
            stride *= static_cast<std::size_t>(n);
        }
    }
    out.table.assign(table_size(out.scope.size(), n), 0.0);

    std::size_t total = 1;
    for (std::size_t i = 0; i < u_len; ++i) total *= static_cast<std::size_t>(n);
    std::vector<int> digits(u_len, 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
        double prod = k.masses[static_cast<std::size_t>(digits[pv])];
        for (std::size_t fi = 0; fi < group.size(); ++fi) {
            std::size_t idx = 0;
            for (std::size_t p = 0; p < u_len; ++p)
                idx += static_cast<std::size_t>(digits[p]) * fstride[fi][p];
            prod *= group[fi].table[idx];
        }
        std::size_t ridx = 0;
        for (std::size_t p = 0; p < u_len; ++p)
            ridx += static_cast<std::size_t>(digits[p]) * rstride[p];
        out.table[ridx] += prod;

        for (std::size_t p = u_len; p-- > 0;) {
            if (++digits[p] < n) break;
            digits[p] = 0;
        }
    }
    return out;
}

}  // namespace

double hom_density(const digraph& f, const step_kernel& k) {
    if (f.n_vertices < 1 || f.n_vertices > 8) {
        throw config_error("hom_density: need 1..8 vertices, got " +
                           std::to_string(f.n_vertices));
    }
    for (const auto& e : f.edges) {
        if (e.first < 0 || e.first >= f.n_vertices || e.second < 0 ||
            e.second >= f.n_vertices) {
            throw config_error("hom_density: edge endpoint out of range");
        }
    }
    k.validate();

    std::vector<factor> factors;
    for (const auto& e : f.edges) factors.push_back(edge_factor(k, e.first, e.second));

    std::vector<int> remaining;
    for (int v = 0; v < f.n_vertices; ++v) remaining.push_back(v);

    double scalar = 1.0;
    while (!remaining.empty()) {
        // Min-degree heuristic: eliminate the vertex whose joint scope (the
        // union over factors touching it) is smallest; ties by vertex index.
        int best_v = -1;
        std::size_t best_scope = 0;
        for (int v : remaining) {
            std::set<int> scope_union;
            for (const factor& fc : factors) {
                if (std::find(fc.scope.begin(), fc.scope.end(), v) != fc.scope.end())
                    scope_union.insert(fc.scope.begin(), fc.scope.end());
            }
            const std::size_t sz = scope_union.empty() ? 0 : scope_union.size();
            if (best_v < 0 || sz < best_scope) {
                best_v = v;
                best_scope = sz;
            }
        }

        std::vector<factor> group;
        std::vector<factor> rest;
        for (factor& fc : factors) {
            if (std::find(fc.scope.begin(), fc.scope.end(), best_v) != fc.scope.end()) {
                group.push_back(std::move(fc));
            } else {
                rest.push_back(std::move(fc));
            }
        }
        factors = std::move(rest);

        if (group.empty()) {
            // Isolated vertex: its label sums to the total mass.
            double mass_sum = 0.0;
            for (double m : k.masses) mass_sum += m;
            scalar *= mass_sum;
        } else {
            factor reduced = eliminate(std::move(group), best_v, k);
            if (reduced.scope.empty()) {
                scalar *= reduced.table[0];
            } else {
                factors.push_back(std::move(reduced));
            }
        }
        remaining.erase(std::remove(remaining.begin(), remaining.end(), best_v),
                        remaining.end());
    }

    for (const factor& fc : factors) scalar *= fc.table[0];
    return scalar;
}

}  // namespace coweave
