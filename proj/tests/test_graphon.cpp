#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "coweave/core/error.hpp"
#include "coweave/core/mixture.hpp"
#include "coweave/core/rng.hpp"
#include "coweave/graphon/cut_norm.hpp"
#include "coweave/graphon/hom_density.hpp"
#include "coweave/graphon/kernel.hpp"
#include "coweave/graphon/partition.hpp"
#include "coweave/graphon/sample.hpp"

using namespace coweave;

namespace {

step_kernel random_kernel(int n, std::uint64_t seed, double scale = 1.0) {
    step_kernel k = step_kernel::uniform(n);
    const counter_rng rng(seed);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            k.at(i, j) = scale * (2.0 * rng.uniform(static_cast<std::uint64_t>(i) * n + j, 0,
                                                    rng_role::init, 0) -
                                  1.0);
    return k;
}

step_kernel two_block_identity() {
    step_kernel k = step_kernel::uniform(2);
    k.values = {1.0, 0.0, 0.0, 1.0};
    return k;
}

}  // namespace

// ---------------------------------------------------------------------------
// Kernel plumbing

TEST_CASE("step kernel constructors and validation") {
    const step_kernel u = step_kernel::uniform(4, 0.5);
    CHECK(u.n == 4);
    CHECK(u.masses == std::vector<double>(4, 0.25));
    CHECK(u.sup_norm() == 0.5);
    const step_kernel w = step_kernel::with_masses({0.2, 0.8}, -1.5);
    CHECK(w.sup_norm() == 1.5);
    CHECK_NOTHROW(w.validate());
    step_kernel bad = u;
    bad.masses[0] = -0.25;
    bad.masses[1] = 0.75;
    CHECK_THROWS_AS(bad.validate(), config_error);
    step_kernel drift = u;
    drift.masses[0] = 0.3;
    CHECK_THROWS_AS(drift.validate(), config_error);  // masses no longer sum to 1
}

TEST_CASE("kernel CSV round trip and difference") {
    step_kernel k = random_kernel(3, 5);
    k.masses = {0.5, 0.3, 0.2};
    const std::string path =
        (std::filesystem::temp_directory_path() / "coweave_kernel.csv").string();
    k.save(path);
    const step_kernel back = step_kernel::load(path);
    CHECK(back.masses == k.masses);
    CHECK(back.values == k.values);
    std::remove(path.c_str());

    const step_kernel d = kernel_difference(k, k);
    CHECK(d.sup_norm() == 0.0);
    step_kernel other = random_kernel(3, 6);
    CHECK_THROWS_AS(kernel_difference(k, other), config_error);  // masses differ
}

TEST_CASE("rectangle_sum computes mass-weighted box integrals") {
    const step_kernel k = two_block_identity();
    CHECK(rectangle_sum(k, {0}, {0}) == Catch::Approx(0.25));
    CHECK(rectangle_sum(k, {0}, {1}) == 0.0);
    CHECK(rectangle_sum(k, {0, 1}, {0, 1}) == Catch::Approx(0.5));
    CHECK(rectangle_sum(k, {}, {0, 1}) == 0.0);
}

// ---------------------------------------------------------------------------
// Cut norm

TEST_CASE("cut norm exact on hand-checkable kernels") {
    CHECK(cut_norm_exact(step_kernel::uniform(3, 0.0)).value == 0.0);
    // Constant kernels: the full rectangle is optimal.
    CHECK(cut_norm_exact(step_kernel::uniform(3, 0.7)).value == Catch::Approx(0.7));
    CHECK(cut_norm_exact(step_kernel::uniform(3, -0.7)).value == Catch::Approx(0.7));
    // Identity two-block: best box is one diagonal block... but the full set
    // scores 0.5 = 0.25 + 0.25, beating a single block's 0.25.
    CHECK(cut_norm_exact(two_block_identity()).value == Catch::Approx(0.5));
    // Signed checkerboard: any single block attains 0.25; complements cancel.
    step_kernel sign = step_kernel::uniform(2);
    sign.values = {1.0, -1.0, -1.0, 1.0};
    CHECK(cut_norm_exact(sign).value == Catch::Approx(0.25));
    // Witness is recomputable through rectangle_sum.
    const cut_witness w = cut_norm_exact(two_block_identity());
    CHECK(std::fabs(rectangle_sum(two_block_identity(), w.rows, w.cols)) ==
          Catch::Approx(w.value));
}

TEST_CASE("cut norm scales exactly under powers of two") {
    const step_kernel k = random_kernel(8, 7);
    step_kernel k2 = k;
    for (double& v : k2.values) v *= 2.0;
    CHECK(cut_norm_exact(k2).value == 2.0 * cut_norm_exact(k).value);
}

TEST_CASE("cut norm triangle inequality on random pairs") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const step_kernel a = random_kernel(9, 100 + s);
        const step_kernel b = random_kernel(9, 200 + s);
        step_kernel sum = a;
        for (std::size_t i = 0; i < sum.values.size(); ++i) sum.values[i] += b.values[i];
        CHECK(cut_norm_exact(sum).value <=
              cut_norm_exact(a).value + cut_norm_exact(b).value + 1e-12);
    }
}

TEST_CASE("cut norm guards its enumeration cap") {
    CHECK_THROWS_AS(cut_norm_exact(step_kernel::uniform(30, 1.0)), resource_error);
    CHECK_NOTHROW(cut_norm_exact(step_kernel::uniform(30, 1.0), 30));
}

TEST_CASE("heuristic cut norm is a certified lower bound of decent quality") {
    const counter_rng rng(12345);
    int good = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const step_kernel k = random_kernel(10, 300 + s);
        const double exact = cut_norm_exact(k).value;
        const cut_witness h = cut_norm_heuristic(k, 8, counter_rng(rng.derive(s, 0, rng_role::witness)));
        CHECK(h.value <= exact + 1e-12);
        CHECK(std::fabs(rectangle_sum(k, h.rows, h.cols)) == Catch::Approx(h.value));
        if (h.value >= 0.95 * exact) ++good;
    }
    CHECK(good >= 45);
    // Nonnegative kernels: the full rectangle is optimal and alternating
    // maximization finds it from any start.
    step_kernel pos = random_kernel(10, 999);
    for (double& v : pos.values) v = std::fabs(v);
    CHECK(cut_norm_heuristic(pos, 2, rng).value == Catch::Approx(cut_norm_exact(pos).value));
}

TEST_CASE("sampling bound covers the exact cut norm with high probability") {
    const step_kernel k = random_kernel(20, 77);
    const double exact = cut_norm_exact(k).value;
    const counter_rng rng(31);
    int covered = 0;
    const int trials = 200;
    for (int s = 0; s < trials; ++s) {
        const sampling_bound b =
            cut_norm_sampling_bound(k, 9, 4, counter_rng(rng.derive(static_cast<std::uint64_t>(s),
                                                                    0, rng_role::witness)));
        CHECK(b.slack == Catch::Approx(2.0 * k.sup_norm() / 3.0));
        if (b.bound >= exact) ++covered;
    }
    CHECK(covered >= 198);  // >= 99%
}

// ---------------------------------------------------------------------------
// Infinity-to-one norm

TEST_CASE("operator norm sandwiches the cut norm") {
    // Tightness case: the signed checkerboard attains op = 4 * cut exactly.
    step_kernel sign = step_kernel::uniform(2);
    sign.values = {1.0, -1.0, -1.0, 1.0};
    CHECK(op_norm_inf_to_one(sign) == Catch::Approx(1.0));
    CHECK(cut_norm_exact(sign).value == Catch::Approx(0.25));
    CHECK(op_norm_inf_to_one(two_block_identity()) == Catch::Approx(0.5));
    for (std::uint64_t s = 0; s < 25; ++s) {
        const step_kernel k = random_kernel(10, 500 + s);
        const double cut = cut_norm_exact(k).value;
        const double op = op_norm_inf_to_one(k);
        CHECK(cut <= op + 1e-12);
        CHECK(op <= 4.0 * cut + 1e-12);
    }
    CHECK_THROWS_AS(op_norm_inf_to_one(step_kernel::uniform(30, 1.0)), resource_error);
}

// ---------------------------------------------------------------------------
// Sampling kernels

TEST_CASE("dirac sampling reproduces the kernel on uniform masses") {
    step_kernel k = random_kernel(6, 901);
    const counter_rng rng(1);
    const sampled_kernel s = sample_kernel(k, mixture_spec::dirac(6), rng);
    CHECK(s.labels == std::vector<int>{0, 1, 2, 3, 4, 5});
    CHECK(s.kernel.values == k.values);
    CHECK(s.kernel.masses == std::vector<double>(6, 1.0 / 6.0));
}

TEST_CASE("sampling a constant kernel is exact, not just unbiased") {
    const step_kernel flat = step_kernel::uniform(12, 0.5);
    const counter_rng rng(2);
    for (int r = 0; r < 10; ++r) {
        const sampled_kernel s = sample_kernel(
            flat, mixture_spec::iid(12, flat.masses),
            counter_rng(rng.derive(static_cast<std::uint64_t>(r), 0, rng_role::replicate)));
        // Bit-identical to the source, so every downstream statistic is 0.
        CHECK(s.kernel.values == flat.values);
        CHECK(s.kernel.masses == flat.masses);
        CHECK(cut_norm_exact(kernel_difference(s.kernel, flat)).value == 0.0);
    }
}

TEST_CASE("sampled cut norms concentrate at the two-block rate") {
    step_kernel block = two_block_identity();
    const double source_cut = cut_norm_exact(block).value;  // 0.5
    const counter_rng rng(3);
    auto mean_dev = [&](int n, int replicas) {
        double acc = 0.0;
        for (int r = 0; r < replicas; ++r) {
            const counter_rng crng(rng.derive(static_cast<std::uint64_t>(n) * 1000 +
                                                  static_cast<std::uint64_t>(r),
                                              0, rng_role::replicate));
            const sampled_kernel s = sample_kernel(block, mixture_spec::iid(n, block.masses), crng);
            acc += std::fabs(cut_norm_exact(s.kernel).value - source_cut);
        }
        return acc / replicas;
    };
    const double dev8 = mean_dev(8, 120);
    const double dev16 = mean_dev(16, 120);
    REQUIRE(dev8 > 0.0);
    // Calibrate the constant at n = 8 against the n^{-1/2} concentration law,
    // then require n = 16 to stay below it with slack for Monte Carlo noise.
    const double c_fit = dev8 * std::sqrt(8.0);
    CHECK(dev16 <= 1.5 * c_fit / std::sqrt(16.0));
    CHECK(dev16 < dev8);
}

TEST_CASE("sampled box integrals are unbiased for the source value") {
    const step_kernel k = random_kernel(5, 777);
    const counter_rng rng(4);
    const double source_total = rectangle_sum(k, {0, 1, 2, 3, 4}, {0, 1, 2, 3, 4});
    double acc = 0.0;
    const int replicas = 400;
    std::vector<int> all(16);
    for (int i = 0; i < 16; ++i) all[static_cast<std::size_t>(i)] = i;
    for (int r = 0; r < replicas; ++r) {
        const sampled_kernel s = sample_kernel(
            k, mixture_spec::iid(16, k.masses),
            counter_rng(rng.derive(static_cast<std::uint64_t>(r), 0, rng_role::replicate)));
        acc += rectangle_sum(s.kernel, all, all);
    }
    const double mean = acc / replicas;
    // Diagonal-inclusion bias is O(1/n); 3 sigma of the replica noise covers
    // the rest.
    CHECK(std::fabs(mean - source_total) < 0.05);
}

// ---------------------------------------------------------------------------
// Weak regularity partitions

TEST_CASE("projection onto a partition averages blocks and contracts the cut norm") {
    step_kernel k = random_kernel(12, 404);
    label_partition p;
    p.n_labels = 12;
    p.n_classes = 3;
    p.class_of.resize(12);
    for (int i = 0; i < 12; ++i) p.class_of[static_cast<std::size_t>(i)] = i % 3;
    CHECK(p.is_equipartition(k.masses));
    const step_kernel proj = project_kernel(k, p);
    // Projection is idempotent and constant on blocks.
    const step_kernel proj2 = project_kernel(proj, p);
    for (std::size_t i = 0; i < proj.values.size(); ++i)
        CHECK(proj.values[i] == Catch::Approx(proj2.values[i]).margin(1e-14));
    CHECK(cut_norm_exact(proj).value <= cut_norm_exact(k).value + 1e-12);
    const step_kernel quot = quotient_kernel(k, p);
    CHECK(quot.n == 3);
    CHECK(quot.at(0, 1) == Catch::Approx(proj.at(0, 1)));

    const auto cm = p.class_masses(k.masses);
    CHECK(cm.size() == 3);
    CHECK(cm[0] == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("projecting a block kernel onto its own partition is lossless") {
    label_partition p;
    p.n_labels = 8;
    p.n_classes = 2;
    p.class_of = {0, 0, 0, 0, 1, 1, 1, 1};
    step_kernel k = step_kernel::uniform(8);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            k.at(i, j) = (p.class_of[static_cast<std::size_t>(i)] ==
                          p.class_of[static_cast<std::size_t>(j)])
                             ? 1.0
                             : -0.5;
    const step_kernel proj = project_kernel(k, p);
    CHECK(proj.values == k.values);
    const counter_rng rng(5);
    const regularity_result reg = weak_regularity_partition(k, 2, 8, rng);
    CHECK(reg.residual_cut <= 1e-9);
}

TEST_CASE("weak regularity meets its declared error bound") {
    const step_kernel k = random_kernel(16, 606);
    const counter_rng rng(6);
    const int m_target = 4;
    const regularity_result reg = weak_regularity_partition(k, m_target, 8, rng);
    CHECK(reg.partition.n_labels == 16);
    CHECK(reg.partition.n_classes <= m_target);
    CHECK(reg.error_bound ==
          Catch::Approx(8.0 * k.sup_norm() / std::sqrt(std::log(double(m_target)))));
    CHECK(reg.residual_cut <= reg.error_bound);
    // The projected kernel lives on the original label space.
    CHECK(reg.projected.n == 16);
}

// ---------------------------------------------------------------------------
// Homomorphism densities

TEST_CASE("hom densities match brute force on small digraphs") {
    const step_kernel k = random_kernel(4, 321, 0.8);
    // Single edge: the full mass-weighted mean.
    double mean = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            mean += k.masses[static_cast<std::size_t>(i)] * k.masses[static_cast<std::size_t>(j)] *
                    k.at(i, j);
    CHECK(hom_density(digraph_edge(), k) == Catch::Approx(mean));
    // Constant kernel: density of any digraph with E edges is c^E.
    const step_kernel flat = step_kernel::uniform(3, 0.5);
    CHECK(hom_density(digraph_path(3), flat) == Catch::Approx(std::pow(0.5, 3)));
    CHECK(hom_density(digraph_cycle(4), flat) == Catch::Approx(std::pow(0.5, 4)));
    // Directed 2-cycle on the identity two-block: sum m_i m_j k_ij k_ji.
    CHECK(hom_density(digraph_cycle(2), two_block_identity()) == Catch::Approx(0.5));
    // Triangle by explicit triple sum.
    double tri = 0.0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                tri += k.masses[static_cast<std::size_t>(a)] * k.masses[static_cast<std::size_t>(b)] *
                       k.masses[static_cast<std::size_t>(c)] * k.at(a, b) * k.at(b, c) *
                       k.at(c, a);
    CHECK(hom_density(digraph_cycle(3), k) == Catch::Approx(tri).margin(1e-12));
    // Complete digraph on 3 vertices: all ordered pairs.
    double comp = 0.0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                comp += k.masses[static_cast<std::size_t>(a)] *
                        k.masses[static_cast<std::size_t>(b)] *
                        k.masses[static_cast<std::size_t>(c)] * k.at(a, b) * k.at(b, a) *
                        k.at(b, c) * k.at(c, b) * k.at(a, c) * k.at(c, a);
    CHECK(hom_density(digraph_complete(3), k) == Catch::Approx(comp).margin(1e-12));
}

TEST_CASE("hom density respects kernel scaling per edge") {
    const step_kernel k = random_kernel(5, 654, 0.6);
    step_kernel k2 = k;
    for (double& v : k2.values) v *= 2.0;
    CHECK(hom_density(digraph_path(2), k2) == Catch::Approx(4.0 * hom_density(digraph_path(2), k)));
}
