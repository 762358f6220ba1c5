#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "rrm/baselines.hpp"

using namespace rrm;

namespace {

using Matrix = std::vector<std::vector<double>>;

Matrix random_matrix(int n, std::mt19937_64& rng)
{
    std::lognormal_distribution<double> w(0.0, 1.5);
    Matrix m(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j)
                m[i][j] = w(rng);
    return m;
}

double exhaustive_min_weight(const InterferenceGraph& g, int k)
{
    AllocationVector c(g.n, 0);
    double best = 1e300;
    while (true) {
        best = std::min(best, monochromatic_weight(g, c));
        int pos = 0;
        while (pos < g.n && ++c[pos] == k)
            c[pos++] = 0;
        if (pos == g.n)
            return best;
    }
}

Snapshot random_snapshot(int n, int k, std::mt19937_64& rng)
{
    RadioConfig radio;
    radio.num_channels = k;
    ChannelGainTensor g(k, n, 1);
    std::uniform_real_distribution<double> cross(-100.0, -70.0), own(-65.0, -50.0);
    for (int c = 0; c < k; ++c)
        for (int tx = 0; tx < n; ++tx)
            for (int rx = 0; rx < n; ++rx)
                g.at(c, tx, rx) = std::pow(10.0, (tx == rx ? own(rng) : cross(rng)) / 10.0);
    Matrix pairwise(n, std::vector<double>(n, 0.0));
    for (int v = 0; v < n; ++v)
        for (int a = 0; a < n; ++a)
            if (a != v) {
                for (int c = 0; c < k; ++c)
                    pairwise[v][a] += g.at(c, a, v) / k;
            }
    std::uniform_int_distribution<int> ch(0, k - 1);
    AllocationVector alloc(n);
    for (auto& c : alloc)
        c = ch(rng);
    return Snapshot{g, noise_power_mw(radio), radio, alloc, pairwise};
}

} // namespace

TEST_CASE("interference graph construction")
{
    const Matrix two{{0.0, 1e-9}, {3e-9, 0.0}};
    const auto g2 = build_graph(two, 4);
    CHECK(g2.has_edge(0, 1));
    CHECK(g2.weight[0][1] == 3e-9);

    const auto zero = build_graph(Matrix(4, std::vector<double>(4, 0.0)), 3);
    int edges = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (zero.has_edge(i, j)) {
                ++edges;
                CHECK(zero.weight[i][j] == 0.0);
            }
    CHECK(edges > 0);

    const Matrix hand{{0, 5, 1, 3}, {2, 0, 8, 1}, {4, 4, 0, 9}, {7, 6, 2, 0}};
    const auto g = build_graph(hand, 3);
    for (int i = 0; i < 4; ++i) {
        std::vector<int> others;
        for (int j = 0; j < 4; ++j)
            if (j != i)
                others.push_back(j);
        std::stable_sort(others.begin(), others.end(), [&](int a, int b) { return hand[i][a] > hand[i][b]; });
        others.resize(2);
        CHECK(g.selected[i] == others);
        for (int j : others)
            CHECK(g.has_edge(i, j));
    }
    CHECK(build_graph(hand, 1).neighbors(0).empty());
    CHECK_THROWS(build_graph({{0.0, -1.0}, {1.0, 0.0}}, 2));
}

TEST_CASE("graph coloring")
{
    std::mt19937_64 rng(8);
    SUBCASE("enough channels separates everyone")
    {
        const auto g = build_graph(random_matrix(5, rng), 6);
        const auto c = cgc_allocate(g, 6);
        CHECK(std::set<int>(c.begin(), c.end()).size() == 5);
        CHECK(monochromatic_weight(g, c) == 0.0);
    }
    SUBCASE("equal-weight triangle with two colors")
    {
        const Matrix tri{{0, 1, 1}, {1, 0, 1}, {1, 1, 0}};
        const auto g = build_graph(tri, 3);
        CHECK(monochromatic_weight(g, cgc_allocate(g, 2)) == 1.0);
    }
    SUBCASE("local search descends and lands near the optimum")
    {
        int near = 0;
        for (int trial = 0; trial < 100; ++trial) {
            const auto g = build_graph(random_matrix(8, rng), 3);
            std::vector<double> trace;
            const auto c = cgc_allocate(g, 3, &trace);
            for (std::size_t i = 1; i < trace.size(); ++i)
                CHECK(trace[i] <= trace[i - 1]);
            const double opt = exhaustive_min_weight(g, 3);
            const double got = monochromatic_weight(g, c);
            CHECK(got >= opt);
            near += got <= 1.1 * opt + 1e-12 ? 1 : 0;
        }
        CHECK(near >= 90);
    }
}

TEST_CASE("label matching keeps current channels where possible")
{
    CHECK(match_labels({0, 0, 1, 2}, {2, 2, 0, 1}, 3) == AllocationVector{2, 2, 0, 1});
    const AllocationVector c{1, 0, 1};
    const auto m = match_labels(c, {0, 0, 0}, 2);
    CHECK(m[0] == m[2]);
    CHECK(m[0] != m[1]);
}

TEST_CASE("greedy selection")
{
    const std::vector<double> m{3, 7, 5, 1};
    CHECK(greedy_select(m) == 1);
    const std::vector<double> flat{4, 4, 4, 4};
    CHECK(greedy_select(flat) == 0);
    std::vector<double> shifted = m;
    for (double& v : shifted)
        v += 13.5;
    CHECK(greedy_select(shifted) == greedy_select(m));
    std::vector<int> perm{2, 0, 3, 1};
    std::vector<double> permuted(4);
    for (int i = 0; i < 4; ++i)
        permuted[perm[i]] = m[i];
    CHECK(greedy_select(permuted) == perm[greedy_select(m)]);
}

TEST_CASE("random allocation")
{
    for (int c : random_allocate(10, 1, 3))
        CHECK(c == 0);
    CHECK(random_allocate(20, 4, 99) == random_allocate(20, 4, 99));
    const auto big = random_allocate(100000, 4, 5);
    std::vector<int> counts(4, 0);
    for (int c : big)
        ++counts[c];
    for (int c : counts)
        CHECK(std::abs(c / 1e5 - 0.25) < 0.03);
}

TEST_CASE("brute-force oracle")
{
    std::mt19937_64 rng(21);
    SUBCASE("no more subnetworks than channels: all distinct")
    {
        const auto s = random_snapshot(3, 4, rng);
        const auto best = brute_force_optimal(s, 4);
        CHECK(std::set<int>(best.allocation.begin(), best.allocation.end()).size() == 3);
    }
    SUBCASE("single channel")
    {
        const auto s = random_snapshot(2, 1, rng);
        CHECK(brute_force_optimal(s, 1).allocation == AllocationVector{0, 0});
    }
    SUBCASE("dominates every other allocator")
    {
        for (int trial = 0; trial < 100; ++trial) {
            const auto s = random_snapshot(6, 2, rng);
            const double best = brute_force_optimal(s, 2).sum_rate_bps;
            const auto cgc = match_labels(cgc_allocate(build_graph(s.pairwise_mw, 2), 2), s.allocation, 2);
            for (const auto& a : {cgc, greedy_one_shot(s), random_allocate(6, 2, trial), s.allocation})
                CHECK(best >= sum_rate_bps(s.gains, a, s.noise_mw, s.radio));
        }
    }
    SUBCASE("refuses large instances")
    {
        const auto s = random_snapshot(11, 4, rng);
        CHECK_THROWS_AS(brute_force_optimal(s, 4), InstanceTooLarge);
    }
}
