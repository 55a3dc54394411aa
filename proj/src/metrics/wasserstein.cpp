#include "coweave/metrics/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>

#include "coweave/core/error.hpp"

namespace coweave {

namespace {

void check_masses(const std::vector<double>& m, const char* side) {
    double sum = 0.0;
    for (double v : m) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw config_error(std::string("wasserstein1: bad mass on ") + side);
        sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw config_error(std::string("wasserstein1: masses on ") + side +
                           " sum to " + std::to_string(sum));
}

double logsumexp(const std::vector<double>& terms) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double t : terms) mx = std::max(mx, t);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double t : terms) s += std::exp(t - mx);
    return mx + std::log(s);
}

// Entropic approximation: log-domain Sinkhorn followed by plan rounding to
// restore exact marginals; the returned cost is an upward-biased estimate.
w1_result sinkhorn_w1(const std::vector<double>& cost, const std::vector<double>& m1,
                      const std::vector<double>& m2, int n1, int n2) {
    double cmax = 0.0;
    for (double c : cost) cmax = std::max(cmax, c);
    w1_result out;
    out.exact = false;
    out.certified = false;
    if (cmax == 0.0) return out;

    const double eps = 1e-2 * cmax;
    std::vector<double> log_m1(m1.size()), log_m2(m2.size());
    for (std::size_t i = 0; i < m1.size(); ++i)
        log_m1[i] = m1[i] > 0.0 ? std::log(m1[i]) : -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m2.size(); ++j)
        log_m2[j] = m2[j] > 0.0 ? std::log(m2[j]) : -std::numeric_limits<double>::infinity();

    std::vector<double> f(static_cast<std::size_t>(n1), 0.0);
    std::vector<double> g(static_cast<std::size_t>(n2), 0.0);
    std::vector<double> buf(static_cast<std::size_t>(std::max(n1, n2)));

    const int max_iter = 2000;
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        for (int i = 0; i < n1; ++i) {
            buf.resize(static_cast<std::size_t>(n2));
            for (int j = 0; j < n2; ++j) {
                buf[static_cast<std::size_t>(j)] =
                    (g[static_cast<std::size_t>(j)] -
                     cost[static_cast<std::size_t>(i) * n2 + j]) / eps +
                    log_m2[static_cast<std::size_t>(j)];
            }
            f[static_cast<std::size_t>(i)] = -eps * logsumexp(buf);
        }
        double col_err = 0.0;
        for (int j = 0; j < n2; ++j) {
            buf.resize(static_cast<std::size_t>(n1));
            for (int i = 0; i < n1; ++i) {
                buf[static_cast<std::size_t>(i)] =
                    (f[static_cast<std::size_t>(i)] -
                     cost[static_cast<std::size_t>(i) * n2 + j]) / eps +
                    log_m1[static_cast<std::size_t>(i)];
            }
            const double lse = logsumexp(buf);
            col_err += std::fabs(std::exp(lse + g[static_cast<std::size_t>(j)] / eps +
                                          log_m2[static_cast<std::size_t>(j)]) -
                                 m2[static_cast<std::size_t>(j)]);
            g[static_cast<std::size_t>(j)] = -eps * lse;
        }
        if (col_err < 1e-9) {
            ++iter;
            break;
        }
    }
    out.iterations = iter;

    // Dense plan, then rounding (scale rows, scale columns, patch the
    // residual with an outer product) so marginals hold exactly.
    std::vector<double> plan(static_cast<std::size_t>(n1) * n2);
    for (int i = 0; i < n1; ++i) {
        for (int j = 0; j < n2; ++j) {
            const std::size_t id = static_cast<std::size_t>(i) * n2 + j;
            const double lp = (f[static_cast<std::size_t>(i)] +
                               g[static_cast<std::size_t>(j)] - cost[id]) / eps +
                              log_m1[static_cast<std::size_t>(i)] +
                              log_m2[static_cast<std::size_t>(j)];
            plan[id] = std::exp(lp);
        }
    }
    std::vector<double> rowsum(static_cast<std::size_t>(n1), 0.0);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j)
            rowsum[static_cast<std::size_t>(i)] += plan[static_cast<std::size_t>(i) * n2 + j];
    for (int i = 0; i < n1; ++i) {
        const double r = rowsum[static_cast<std::size_t>(i)] > 0.0
                             ? std::min(1.0, m1[static_cast<std::size_t>(i)] /
                                                 rowsum[static_cast<std::size_t>(i)])
                             : 0.0;
        for (int j = 0; j < n2; ++j) plan[static_cast<std::size_t>(i) * n2 + j] *= r;
    }
    std::vector<double> colsum(static_cast<std::size_t>(n2), 0.0);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j)
            colsum[static_cast<std::size_t>(j)] += plan[static_cast<std::size_t>(i) * n2 + j];
    for (int j = 0; j < n2; ++j) {
        const double r = colsum[static_cast<std::size_t>(j)] > 0.0
                             ? std::min(1.0, m2[static_cast<std::size_t>(j)] /
                                                 colsum[static_cast<std::size_t>(j)])
                             : 0.0;
        for (int i = 0; i < n1; ++i) plan[static_cast<std::size_t>(i) * n2 + j] *= r;
    }
    std::vector<double> err_r(static_cast<std::size_t>(n1), 0.0);
    std::vector<double> err_c(static_cast<std::size_t>(n2), 0.0);
    double def = 0.0;
    for (int i = 0; i < n1; ++i) {
        double s = 0.0;
        for (int j = 0; j < n2; ++j) s += plan[static_cast<std::size_t>(i) * n2 + j];
        err_r[static_cast<std::size_t>(i)] = m1[static_cast<std::size_t>(i)] - s;
        def += err_r[static_cast<std::size_t>(i)];
    }
    for (int j = 0; j < n2; ++j) {
        double s = 0.0;
        for (int i = 0; i < n1; ++i) s += plan[static_cast<std::size_t>(i) * n2 + j];
        err_c[static_cast<std::size_t>(j)] = m2[static_cast<std::size_t>(j)] - s;
    }
    if (def > 1e-300) {
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n2; ++j)
                plan[static_cast<std::size_t>(i) * n2 + j] +=
                    err_r[static_cast<std::size_t>(i)] *
                    err_c[static_cast<std::size_t>(j)] / def;
    }
    double total = 0.0;
    for (std::size_t id = 0; id < plan.size(); ++id) total += plan[id] * cost[id];
    out.value = total;
    return out;
}

}  // namespace

w1_result wasserstein1(const std::vector<double>& x1, const std::vector<double>& m1,
                       const std::vector<double>& x2, const std::vector<double>& m2,
                       const domain& dom) {
    const int d = dom.dim;
    if (d < 1) throw config_error("wasserstein1: bad domain dimension");
    if (x1.size() != m1.size() * static_cast<std::size_t>(d) ||
        x2.size() != m2.size() * static_cast<std::size_t>(d)) {
        throw config_error("wasserstein1: point/mass size mismatch");
    }
    const int n1 = static_cast<int>(m1.size());
    const int n2 = static_cast<int>(m2.size());
    if (n1 < 1 || n2 < 1) throw config_error("wasserstein1: empty cloud");
    check_masses(m1, "side 1");
    check_masses(m2, "side 2");
    if (static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2) >
        (std::size_t(1) << 25)) {
        throw resource_error("wasserstein1: cost matrix " + std::to_string(n1) + " x " +
                             std::to_string(n2) + " exceeds the size limit");
    }

    std::vector<double> cost(static_cast<std::size_t>(n1) * n2);
    for (int i = 0; i < n1; ++i) {
        const double* a = &x1[static_cast<std::size_t>(i) * d];
        for (int j = 0; j < n2; ++j) {
            const double* b = &x2[static_cast<std::size_t>(j) * d];
            cost[static_cast<std::size_t>(i) * n2 + j] = dom.distance(a, b);
        }
    }

    if (std::max(n1, n2) <= kExactTransportLimit) {
        const transport_result tr = solve_transport(m1, m2, cost);
        w1_result out;
        out.value = tr.cost;
        out.exact = true;
        out.certified = tr.certified;
        out.iterations = tr.iterations;
        return out;
    }
    return sinkhorn_w1(cost, m1, m2, n1, n2);
}

double wasserstein1_1d(std::vector<double> x1, std::vector<double> m1,
                       std::vector<double> x2, std::vector<double> m2) {
    if (x1.size() != m1.size() || x2.size() != m2.size())
        throw config_error("wasserstein1_1d: size mismatch");
    check_masses(m1, "side 1");
    check_masses(m2, "side 2");

    // Integral of |F1 - F2| over the merged support.
    struct event {
        double x;
        double dm1;
        double dm2;
    };
    std::vector<event> ev;
    ev.reserve(x1.size() + x2.size());
    for (std::size_t i = 0; i < x1.size(); ++i) ev.push_back({x1[i], m1[i], 0.0});
    for (std::size_t j = 0; j < x2.size(); ++j) ev.push_back({x2[j], 0.0, m2[j]});
    std::sort(ev.begin(), ev.end(),
              [](const event& a, const event& b) { return a.x < b.x; });

    double total = 0.0;
    double f1 = 0.0, f2 = 0.0;
    for (std::size_t t = 0; t < ev.size(); ++t) {
        if (t > 0) total += std::fabs(f1 - f2) * (ev[t].x - ev[t - 1].x);
        f1 += ev[t].dm1;
        f2 += ev[t].dm2;
    }
    return total;
}

}  // namespace coweave
