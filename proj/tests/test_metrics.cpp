#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "coweave/core/domain.hpp"
#include "coweave/core/error.hpp"
#include "coweave/core/rng.hpp"
#include "coweave/meanfield/triplet.hpp"
#include "coweave/metrics/delta.hpp"
#include "coweave/metrics/gamma.hpp"
#include "coweave/metrics/transport.hpp"
#include "coweave/metrics/wasserstein.hpp"

using namespace coweave;

namespace {

step_triplet random_triplet(int n, std::uint64_t seed, double kernel_scale = 1.0) {
    step_triplet t = step_triplet::uniform(n, 1);
    const counter_rng rng(seed);
    for (int i = 0; i < n; ++i) {
        t.states[static_cast<std::size_t>(i)] = domain::reduce_coord(
            kTwoPi * rng.uniform(static_cast<std::uint64_t>(i), 0, rng_role::init, 0));
        for (int j = 0; j < n; ++j)
            t.kernel[static_cast<std::size_t>(i) * n + j] =
                kernel_scale *
                (2.0 * rng.uniform(static_cast<std::uint64_t>(i) * n + j, 1, rng_role::init, 0) -
                 1.0);
    }
    return t;
}

coupling diagonal_coupling(const std::vector<double>& masses) {
    const int n = static_cast<int>(masses.size());
    coupling g;
    g.n1 = n;
    g.n2 = n;
    g.weights.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        g.weights[static_cast<std::size_t>(i) * n + i] = masses[static_cast<std::size_t>(i)];
    return g;
}

}  // namespace

// ---------------------------------------------------------------------------
// Couplings and transport

TEST_CASE("coupling validation checks marginals") {
    const std::vector<double> mu = {0.5, 0.5};
    const std::vector<double> nu = {0.25, 0.75};
    const coupling prod = product_coupling(mu, nu);
    CHECK_NOTHROW(prod.validate(mu, nu));
    CHECK(prod.at(0, 1) == Catch::Approx(0.375));
    coupling bad = prod;
    bad.weights[0] += 0.1;
    CHECK_THROWS_AS(bad.validate(mu, nu), config_error);
    coupling negative = prod;
    negative.weights[0] = -0.125;
    negative.weights[1] = 0.375;
    CHECK_THROWS_AS(negative.validate(mu, nu), config_error);
}

TEST_CASE("transport solver finds certified optima on hand cases") {
    // Mass must cross: mu concentrated left, nu right, antidiagonal free.
    const std::vector<double> mu = {0.7, 0.3};
    const std::vector<double> nu = {0.4, 0.6};
    const std::vector<double> cost = {0.0, 1.0, 1.0, 0.0};
    const transport_result r = solve_transport(mu, nu, cost);
    CHECK(r.certified);
    CHECK(r.cost == Catch::Approx(0.3));
    CHECK_NOTHROW(r.plan.validate(mu, nu));
    // Permutation cost favors the antidiagonal exactly.
    const std::vector<double> cost2 = {1.0, 0.0, 0.0, 1.0};
    const transport_result r2 =
        solve_transport({0.5, 0.5}, {0.5, 0.5}, cost2);
    CHECK(r2.cost == Catch::Approx(0.0));
    CHECK(r2.plan.at(0, 1) == Catch::Approx(0.5));
}

// ---------------------------------------------------------------------------
// Wasserstein-1

TEST_CASE("one-dimensional W1 matches quantile coupling") {
    CHECK(wasserstein1_1d({0.0}, {1.0}, {2.0}, {1.0}) == Catch::Approx(2.0));
    CHECK(wasserstein1_1d({0.0, 1.0}, {0.5, 0.5}, {2.0}, {1.0}) == Catch::Approx(1.5));
    // Same points, different masses: |F1 - F2| integrates to 0.25.
    CHECK(wasserstein1_1d({0.0, 1.0}, {0.5, 0.5}, {0.0, 1.0}, {0.25, 0.75}) ==
          Catch::Approx(0.25));
}

TEST_CASE("general W1 agrees with the 1d formula and is certified") {
    const counter_rng rng(8);
    const domain dom{geometry::euclidean, 1};
    for (std::uint64_t s = 0; s < 10; ++s) {
        std::vector<double> x1(5), x2(7), m1(5, 0.2), m2(7, 1.0 / 7.0);
        for (int i = 0; i < 5; ++i)
            x1[static_cast<std::size_t>(i)] = rng.uniform(s, static_cast<std::uint64_t>(i),
                                                          rng_role::init, 0);
        for (int i = 0; i < 7; ++i)
            x2[static_cast<std::size_t>(i)] = rng.uniform(s, static_cast<std::uint64_t>(i),
                                                          rng_role::init, 1);
        const w1_result r = wasserstein1(x1, m1, x2, m2, dom);
        CHECK(r.exact);
        CHECK(r.certified);
        CHECK(r.value == Catch::Approx(wasserstein1_1d(x1, m1, x2, m2)).margin(1e-10));
    }
}

TEST_CASE("W1 on the torus uses geodesic distances") {
    const domain dom{geometry::torus, 1};
    const std::vector<double> a = {0.1};
    const std::vector<double> b = {kTwoPi - 0.1};
    const w1_result r = wasserstein1(a, {1.0}, b, {1.0}, dom);
    CHECK(r.value == Catch::Approx(0.2).margin(1e-12));
    // Identical distributions at distance 0 regardless of labels.
    const std::vector<double> xs = {0.5, 3.0, 5.5};
    const std::vector<double> ms = {0.2, 0.5, 0.3};
    CHECK(wasserstein1(xs, ms, xs, ms, dom).value == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("W1 validates inputs") {
    const domain dom{geometry::euclidean, 1};
    CHECK_THROWS_AS(wasserstein1({0.0}, {0.5}, {1.0}, {1.0}, dom), config_error);
    CHECK_THROWS_AS(wasserstein1({0.0, 1.0}, {0.5, 0.5}, {}, {}, dom), config_error);
}

// ---------------------------------------------------------------------------
// Triplet distance (state transport + coupled cut norm)

TEST_CASE("exact triplet distance vanishes iff relabeled") {
    const step_triplet t = random_triplet(5, 21);
    const delta_result self = delta_exact_small(t, t, domain{geometry::torus, 1});
    CHECK(self.value == 0.0);
    CHECK(self.certified);

    const std::vector<int> perm = {3, 1, 4, 0, 2};
    const delta_result relabeled =
        delta_exact_small(t, t.permuted(perm), domain{geometry::torus, 1});
    CHECK(relabeled.value == 0.0);

    const step_triplet other = random_triplet(5, 22);
    const delta_result off = delta_exact_small(t, other, domain{geometry::torus, 1});
    CHECK(off.value > 0.0);
    CHECK(off.value == Catch::Approx(off.state_part + off.cut_part));
}

TEST_CASE("exact triplet distance is symmetric and satisfies the triangle inequality") {
    const domain dom{geometry::torus, 1};
    for (std::uint64_t s = 0; s < 10; ++s) {
        const step_triplet a = random_triplet(4, 100 + s);
        const step_triplet b = random_triplet(4, 200 + s);
        const step_triplet c = random_triplet(4, 300 + s);
        const double ab = delta_exact_small(a, b, dom).value;
        const double ba = delta_exact_small(b, a, dom).value;
        CHECK(ab == Catch::Approx(ba).margin(1e-12));
        const double ac = delta_exact_small(a, c, dom).value;
        const double cb = delta_exact_small(c, b, dom).value;
        CHECK(ab <= ac + cb + 1e-9);
    }
}

TEST_CASE("triplet distance reduces to W1 when the kernels coincide") {
    const domain dom{geometry::torus, 1};
    step_triplet a = random_triplet(4, 31);
    step_triplet b = random_triplet(4, 32);
    for (double& v : a.kernel) v = 0.4;
    for (double& v : b.kernel) v = 0.4;
    const delta_result d = delta_exact_small(a, b, dom);
    const w1_result w = wasserstein1(a.states, a.masses, b.states, b.masses, dom);
    CHECK(d.cut_part == Catch::Approx(0.0).margin(1e-12));
    CHECK(d.value == Catch::Approx(w.value).margin(1e-9));
}

TEST_CASE("triplet distance reduces to the kernel cut distance when states coincide") {
    const domain dom{geometry::torus, 1};
    step_triplet a = random_triplet(4, 41);
    step_triplet b = random_triplet(4, 42);
    // All mass at one state point: every pairing then has zero transport cost,
    // so only the kernel mismatch can contribute.
    for (double& s : a.states) s = 1.0;
    b.states = a.states;
    const delta_result d = delta_exact_small(a, b, dom);
    const double dcut = cut_distance_exact_small(a.as_step_kernel(), b.as_step_kernel());
    CHECK(d.state_part == Catch::Approx(0.0).margin(1e-12));
    CHECK(d.value == Catch::Approx(dcut).margin(1e-9));
    // The kernel-only distance also vanishes on relabelings.
    const std::vector<int> perm = {2, 3, 0, 1};
    const step_triplet bp = b.permuted(perm);
    CHECK(cut_distance_exact_small(b.as_step_kernel(), bp.as_step_kernel()) ==
          Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("heuristic triplet distance brackets the relabeling optimum") {
    const domain dom{geometry::torus, 1};
    const counter_rng rng(55);
    int bracketed = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const step_triplet a = random_triplet(5, 400 + s);
        const step_triplet b = random_triplet(5, 500 + s);
        const double exact = delta_exact_small(a, b, dom).value;
        const delta_result h =
            delta_heuristic(a, b, dom, counter_rng(rng.derive(s, 0, rng_role::coupling)), 4, 20);
        CHECK(h.value >= 0.0);
        CHECK(std::isfinite(h.value));
        CHECK_FALSE(h.certified);
        double sup_w = 0.0;
        for (double v : a.kernel) sup_w = std::max(sup_w, std::fabs(v));
        for (double v : b.kernel) sup_w = std::max(sup_w, std::fabs(v));
        // Fractional couplings may legitimately undercut the best relabeling
        // (the cut term is convex over the coupling polytope), but only within
        // a small slack, and the search should rarely end above it.
        if (h.value <= exact + 1e-9 && h.value >= exact - 0.05 * sup_w) ++bracketed;
    }
    CHECK(bracketed >= 18);
    // On identical inputs the identity start collapses it to zero.
    const step_triplet t = random_triplet(6, 77);
    CHECK(delta_heuristic(t, t, dom, rng).value <= 1e-9);
}

TEST_CASE("heuristic handles mismatched label counts") {
    const domain dom{geometry::torus, 1};
    const counter_rng rng(66);
    const step_triplet small = random_triplet(3, 88);
    const step_triplet big = random_triplet(12, 89);
    const delta_result d = delta_heuristic(small, big, dom, rng, 2, 10);
    CHECK(d.value >= 0.0);
    CHECK(std::isfinite(d.value));
    CHECK_NOTHROW(d.plan.validate(small.masses, big.masses));
}

// ---------------------------------------------------------------------------
// Coupling-operator distance

TEST_CASE("operator distance vanishes at the diagonal coupling of identical triplets") {
    const domain dom{geometry::torus, 1};
    const step_triplet t = random_triplet(5, 91);
    CHECK(gamma_objective(t, t, dom, diagonal_coupling(t.masses)) == 0.0);
    const gamma_result ev = gamma_evaluate(t, t, dom, diagonal_coupling(t.masses));
    CHECK(ev.value == 0.0);
    CHECK(ev.state_part == 0.0);
    CHECK(ev.op_part_left == 0.0);
    CHECK(ev.op_part_right == 0.0);
}

TEST_CASE("operator distance vanishes at the relabeling coupling of a permuted copy") {
    const domain dom{geometry::torus, 1};
    const step_triplet t = random_triplet(5, 92);
    const std::vector<int> perm = {4, 2, 0, 3, 1};
    const step_triplet p = t.permuted(perm);
    // Coupling that pairs label i of t with its relabeled position in p.
    coupling g;
    g.n1 = 5;
    g.n2 = 5;
    g.weights.assign(25, 0.0);
    for (int i = 0; i < 5; ++i)
        g.weights[static_cast<std::size_t>(perm[i]) * 5 + i] =
            t.masses[static_cast<std::size_t>(perm[i])];
    CHECK_NOTHROW(g.validate(t.masses, p.masses));
    CHECK(gamma_objective(t, p, dom, g) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("operator distance heuristic returns a recomputable witness") {
    const domain dom{geometry::torus, 1};
    const counter_rng rng(93);
    const step_triplet a = random_triplet(5, 94);
    const step_triplet b = random_triplet(5, 95);
    const gamma_result h = gamma_heuristic(a, b, dom, rng, 4, 20);
    CHECK(h.value >= 0.0);
    CHECK_NOTHROW(h.plan.validate(a.masses, b.masses));
    const gamma_result re = gamma_evaluate(a, b, dom, h.plan);
    CHECK(re.value == Catch::Approx(h.value).margin(1e-12));
    CHECK(h.value == Catch::Approx(h.state_part + h.op_part_left + h.op_part_right));
    // The product coupling is always feasible, so the optimized value cannot
    // exceed its objective.
    CHECK(h.value <=
          gamma_objective(a, b, dom, product_coupling(a.masses, b.masses)) + 1e-12);
}

TEST_CASE("residue coupling pairs congruent labels uniformly") {
    const coupling g = residue_coupling(6, 3);
    CHECK(g.n1 == 6);
    CHECK(g.n2 == 6);
    const std::vector<double> uniform(6, 1.0 / 6.0);
    CHECK_NOTHROW(g.validate(uniform, uniform));
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            CHECK(g.at(i, j) == ((i % 3 == j % 3) ? Catch::Approx(0.5 / 6.0) : Catch::Approx(0.0)));
    CHECK_THROWS_AS(residue_coupling(6, 4), config_error);  // modulus must divide n
}
