#include "coweave/metrics/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "coweave/core/error.hpp"

namespace coweave {

void coupling::validate(const std::vector<double>& mu, const std::vector<double>& nu,
                        double tol) const {
    if (static_cast<int>(mu.size()) != n1 || static_cast<int>(nu.size()) != n2) {
        throw config_error("coupling::validate: marginal sizes do not match");
    }
    for (double w : weights) {
        if (!(w >= -tol) || !std::isfinite(w)) {
            throw config_error("coupling::validate: negative or non-finite entry");
        }
    }
    for (int i = 0; i < n1; ++i) {
        double row = 0.0;
        for (int j = 0; j < n2; ++j) row += at(i, j);
        if (std::fabs(row - mu[static_cast<std::size_t>(i)]) > tol) {
            throw config_error("coupling::validate: row marginal " + std::to_string(i) +
                               " off by " +
                               std::to_string(row - mu[static_cast<std::size_t>(i)]));
        }
    }
    for (int j = 0; j < n2; ++j) {
        double col = 0.0;
        for (int i = 0; i < n1; ++i) col += at(i, j);
        if (std::fabs(col - nu[static_cast<std::size_t>(j)]) > tol) {
            throw config_error("coupling::validate: column marginal " + std::to_string(j) +
                               " off by " +
                               std::to_string(col - nu[static_cast<std::size_t>(j)]));
        }
    }
}

coupling product_coupling(const std::vector<double>& mu, const std::vector<double>& nu) {
    coupling g;
    g.n1 = static_cast<int>(mu.size());
    g.n2 = static_cast<int>(nu.size());
    g.weights.resize(mu.size() * nu.size());
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = 0; j < nu.size(); ++j)
            g.weights[i * nu.size() + j] = mu[i] * nu[j];
    return g;
}

namespace {

struct simplex_state {
    int n1, n2;
    const std::vector<double>& cost;
    std::vector<double> flow;      // dense n1*n2; meaningful on basis arcs
    std::vector<char> in_basis;    // dense n1*n2
    // Tree adjacency over nodes 0..n1-1 (rows) and n1..n1+n2-1 (cols);
    // each entry is (neighbor node, arc id).
    std::vector<std::vector<std::pair<int, int>>> adj;

    simplex_state(int a, int b, const std::vector<double>& c)
        : n1(a), n2(b), cost(c), flow(static_cast<std::size_t>(a) * b, 0.0),
          in_basis(static_cast<std::size_t>(a) * b, 0), adj(static_cast<std::size_t>(a + b)) {}

    int arc(int i, int j) const { return i * n2 + j; }

    void add_basis(int i, int j) {
        const int id = arc(i, j);
        in_basis[static_cast<std::size_t>(id)] = 1;
        adj[static_cast<std::size_t>(i)].emplace_back(n1 + j, id);
        adj[static_cast<std::size_t>(n1 + j)].emplace_back(i, id);
    }

    void drop_basis(int id) {
        in_basis[static_cast<std::size_t>(id)] = 0;
        const int i = id / n2;
        const int jn = n1 + id % n2;
        auto strip = [id](std::vector<std::pair<int, int>>& lst) {
            lst.erase(std::remove_if(lst.begin(), lst.end(),
                                     [id](const std::pair<int, int>& e) {
                                         return e.second == id;
                                     }),
                      lst.end());
        };
        strip(adj[static_cast<std::size_t>(i)]);
        strip(adj[static_cast<std::size_t>(jn)]);
    }

    // Node potentials from the spanning tree: u fixed to 0 at node 0, then
    // u_row + v_col = cost on every basis arc.
    void potentials(std::vector<double>& pot) const {
        const int nn = n1 + n2;
        pot.assign(static_cast<std::size_t>(nn), 0.0);
        std::vector<char> seen(static_cast<std::size_t>(nn), 0);
        std::vector<int> stack = {0};
        seen[0] = 1;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (const auto& [w, id] : adj[static_cast<std::size_t>(u)]) {
                if (seen[static_cast<std::size_t>(w)]) continue;
                seen[static_cast<std::size_t>(w)] = 1;
                pot[static_cast<std::size_t>(w)] = cost[static_cast<std::size_t>(id)] -
                                                   pot[static_cast<std::size_t>(u)];
                stack.push_back(w);
            }
        }
    }

    // Tree path from node `from` to node `to` as a node sequence.
    std::vector<int> tree_path(int from, int to) const {
        const int nn = n1 + n2;
        std::vector<int> parent(static_cast<std::size_t>(nn), -2);
        std::vector<int> stack = {from};
        parent[static_cast<std::size_t>(from)] = -1;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            if (u == to) break;
            for (const auto& [w, id] : adj[static_cast<std::size_t>(u)]) {
                (void)id;
                if (parent[static_cast<std::size_t>(w)] != -2) continue;
                parent[static_cast<std::size_t>(w)] = u;
                stack.push_back(w);
            }
        }
        std::vector<int> path;
        for (int u = to; u != -1; u = parent[static_cast<std::size_t>(u)]) path.push_back(u);
        std::reverse(path.begin(), path.end());
        return path;  // from .. to
    }
};

}  // namespace

transport_result solve_transport(const std::vector<double>& mu_in,
                                 const std::vector<double>& nu_in,
                                 const std::vector<double>& cost) {
    const int n1 = static_cast<int>(mu_in.size());
    const int n2 = static_cast<int>(nu_in.size());
    if (n1 < 1 || n2 < 1) throw config_error("solve_transport: empty marginal");
    if (cost.size() != static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2)) {
        throw config_error("solve_transport: cost size mismatch");
    }
    double sum_mu = 0.0, sum_nu = 0.0;
    for (double m : mu_in) {
        if (!(m >= 0.0) || !std::isfinite(m))
            throw config_error("solve_transport: negative or non-finite mass");
        sum_mu += m;
    }
    for (double m : nu_in) {
        if (!(m >= 0.0) || !std::isfinite(m))
            throw config_error("solve_transport: negative or non-finite mass");
        sum_nu += m;
    }
    if (std::fabs(sum_mu - sum_nu) > 1e-9) {
        throw config_error("solve_transport: marginal sums differ by " +
                           std::to_string(sum_mu - sum_nu));
    }
    std::vector<double> mu = mu_in;
    std::vector<double> nu = nu_in;
    {
        // Fold the (tiny) imbalance into the largest nu entry.
        const std::size_t jmax = static_cast<std::size_t>(
            std::max_element(nu.begin(), nu.end()) - nu.begin());
        nu[jmax] += sum_mu - sum_nu;
    }

    simplex_state st(n1, n2, cost);

    // Northwest-corner start: exactly n1 + n2 - 1 basic arcs, degenerate
    // zero arcs included.
    {
        std::vector<double> row = mu, col = nu;
        int i = 0, j = 0;
        while (true) {
            const double f = std::min(row[static_cast<std::size_t>(i)],
                                      col[static_cast<std::size_t>(j)]);
            st.flow[static_cast<std::size_t>(st.arc(i, j))] = f;
            st.add_basis(i, j);
            row[static_cast<std::size_t>(i)] -= f;
            col[static_cast<std::size_t>(j)] -= f;
            if (i == n1 - 1 && j == n2 - 1) break;
            // Advance exactly one index per step: n1 + n2 - 1 basic arcs total.
            if (i == n1 - 1) {
                ++j;
            } else if (j == n2 - 1) {
                ++i;
            } else if (row[static_cast<std::size_t>(i)] <=
                       col[static_cast<std::size_t>(j)]) {
                ++i;
            } else {
                ++j;
            }
        }
    }

    const long max_iter = 200L * (n1 + n2) * (n1 + n2) + 10000L;
    const double opt_tol = 1e-12;
    std::vector<double> pot;
    long iter = 0;
    long degenerate_streak = 0;

    for (; iter < max_iter; ++iter) {
        st.potentials(pot);

        // Entering arc: Dantzig (most negative reduced cost); Bland (first
        // negative) once degenerate pivots pile up.
        const bool bland = degenerate_streak > n1 + n2;
        int enter = -1;
        double best = -opt_tol;
        for (int i = 0; i < n1; ++i) {
            const double ui = pot[static_cast<std::size_t>(i)];
            for (int j = 0; j < n2; ++j) {
                const int id = st.arc(i, j);
                if (st.in_basis[static_cast<std::size_t>(id)]) continue;
                const double r = cost[static_cast<std::size_t>(id)] - ui -
                                 pot[static_cast<std::size_t>(n1 + j)];
                if (r < best) {
                    best = r;
                    enter = id;
                    if (bland) break;
                }
            }
            if (bland && enter >= 0) break;
        }
        if (enter < 0) break;  // optimal

        const int ei = enter / n2;
        const int ej = enter % n2;
        const std::vector<int> path = st.tree_path(n1 + ej, ei);

        // Cycle: entering arc (+), then path arcs alternating (-, +, ...).
        double theta = std::numeric_limits<double>::infinity();
        int leave = -1;
        for (std::size_t t = 0; t + 1 < path.size(); ++t) {
            if (t % 2 != 0) continue;  // only arcs whose flow decreases
            const int a = std::min(path[t], path[t + 1]);
            const int b = std::max(path[t], path[t + 1]);
            const int id = st.arc(a, b - n1);
            const double f = st.flow[static_cast<std::size_t>(id)];
            if (f < theta) {
                theta = f;
                leave = id;
            }
        }
        if (leave < 0) {
            throw numerical_error("solve_transport: no leaving arc found");
        }

        st.flow[static_cast<std::size_t>(enter)] += theta;
        for (std::size_t t = 0; t + 1 < path.size(); ++t) {
            const int a = std::min(path[t], path[t + 1]);
            const int b = std::max(path[t], path[t + 1]);
            const int id = st.arc(a, b - n1);
            st.flow[static_cast<std::size_t>(id)] += (t % 2 == 0) ? -theta : theta;
        }
        st.drop_basis(leave);
        st.add_basis(ei, ej);
        st.flow[static_cast<std::size_t>(leave)] = 0.0;
        degenerate_streak = (theta <= 0.0) ? degenerate_streak + 1 : 0;
    }
    if (iter >= max_iter) {
        throw numerical_error("solve_transport: pivot limit reached (" +
                              std::to_string(max_iter) + ")");
    }

    transport_result out;
    out.plan.n1 = n1;
    out.plan.n2 = n2;
    out.plan.weights = st.flow;
    out.iterations = static_cast<int>(iter);
    double total = 0.0;
    for (std::size_t id = 0; id < st.flow.size(); ++id)
        total += st.flow[id] * cost[id];
    out.cost = total;

    // Certificate, recomputed from scratch.
    st.potentials(pot);
    bool ok = true;
    const double cert_tol = 1e-9;
    for (int i = 0; i < n1 && ok; ++i) {
        for (int j = 0; j < n2; ++j) {
            const int id = st.arc(i, j);
            const double r = cost[static_cast<std::size_t>(id)] -
                             pot[static_cast<std::size_t>(i)] -
                             pot[static_cast<std::size_t>(n1 + j)];
            const double f = st.flow[static_cast<std::size_t>(id)];
            if (r < -cert_tol || f < -cert_tol ||
                (f > cert_tol && std::fabs(r) > cert_tol)) {
                ok = false;
                break;
            }
        }
    }
    try {
        out.plan.validate(mu, nu, 1e-9);
    } catch (const config_error&) {
        ok = false;
    }
    out.certified = ok;
    return out;
}

}  // namespace coweave
