#include "rrm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "rrm/rng.hpp"

namespace rrm {

double InterferenceGraph::weighted_degree(int i) const
{
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
        if (has_edge(i, j))
            sum += weight[i][j];
    }
    return sum;
}

std::vector<int> InterferenceGraph::neighbors(int i) const
{
    std::vector<int> out;
    for (int j = 0; j < n; ++j) {
        if (has_edge(i, j))
            out.push_back(j);
    }
    return out;
}

InterferenceGraph build_graph(const std::vector<std::vector<double>>& pairwise, int k)
{
    const int n = static_cast<int>(pairwise.size());
    for (const auto& row : pairwise) {
        if (static_cast<int>(row.size()) != n)
            throw std::invalid_argument("build_graph: pairwise matrix must be square");
        for (double v : row) {
            if (!(v >= 0.0))
                throw std::invalid_argument("build_graph: pairwise powers must be non-negative");
        }
    }
    InterferenceGraph g;
    g.n = n;
    g.selected.assign(n, {});
    g.weight.assign(n, std::vector<double>(n, 0.0));
    g.edge.assign(n, std::vector<char>(n, 0));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            g.weight[i][j] = (i == j) ? 0.0 : std::max(pairwise[i][j], pairwise[j][i]);
    }
    const int want = std::max(0, k - 1);
    for (int i = 0; i < n; ++i) {
        std::vector<int> others;
        for (int j = 0; j < n; ++j) {
            if (j != i)
                others.push_back(j);
        }
        // strongest first, ties to the lower index
        std::stable_sort(others.begin(), others.end(),
                         [&](int a, int b) { return pairwise[i][a] > pairwise[i][b]; });
        others.resize(std::min<std::size_t>(others.size(), static_cast<std::size_t>(want)));
        g.selected[i] = others;
        for (int j : others) {
            g.edge[i][j] = 1;
            g.edge[j][i] = 1;
        }
    }
    return g;
}

double monochromatic_weight(const InterferenceGraph& graph, const AllocationVector& colors)
{
    if (static_cast<int>(colors.size()) != graph.n)
        throw std::invalid_argument("monochromatic_weight: coloring size mismatch");
    double total = 0.0;
    for (int i = 0; i < graph.n; ++i) {
        for (int j = i + 1; j < graph.n; ++j) {
            if (graph.has_edge(i, j) && colors[i] == colors[j])
                total += graph.weight[i][j];
        }
    }
    return total;
}

namespace {

// Conflict weight of vertex v on every color, ignoring uncolored (-1) vertices.
std::vector<double> color_costs(const InterferenceGraph& g, const AllocationVector& colors, int v, int k)
{
    std::vector<double> cost(static_cast<std::size_t>(k), 0.0);
    for (int j = 0; j < g.n; ++j) {
        if (j != v && g.has_edge(v, j) && colors[j] >= 0)
            cost[colors[j]] += g.weight[v][j];
    }
    return cost;
}

// Greedy construction: next vertex has the most distinct colors among its
// colored neighbors, ties broken by position in order.
AllocationVector greedy_coloring(const InterferenceGraph& graph, int k, const std::vector<int>& order)
{
    const int n = graph.n;
    AllocationVector colors(static_cast<std::size_t>(n), -1);
    std::vector<int> usage(static_cast<std::size_t>(k), 0);
    for (int step = 0; step < n; ++step) {
        int v = -1, v_sat = -1;
        for (int u : order) {
            if (colors[u] >= 0)
                continue;
            std::vector<char> seen(static_cast<std::size_t>(k), 0);
            int sat = 0;
            for (int j = 0; j < n; ++j) {
                if (j != u && graph.has_edge(u, j) && colors[j] >= 0 && !seen[colors[j]]) {
                    seen[colors[j]] = 1;
                    ++sat;
                }
            }
            if (sat > v_sat) {
                v = u;
                v_sat = sat;
            }
        }
        const auto cost = color_costs(graph, colors, v, k);
        // cheapest color; among equals the least used, then the lowest index
        int best = 0;
        for (int c = 1; c < k; ++c) {
            if (cost[c] < cost[best] || (cost[c] == cost[best] && usage[c] < usage[best]))
                best = c;
        }
        colors[v] = best;
        ++usage[best];
    }
    return colors;
}

// Descends with single-vertex recolorings and, once those stall, two-vertex
// color exchanges. cost[v][c] is the conflict weight of v on color c. on_move
// receives the weight after every accepted move; every move lowers it.
template <typename OnMove>
double local_search(const InterferenceGraph& graph, int k, const std::vector<int>& order, AllocationVector& colors,
                    OnMove&& on_move)
{
    const int n = graph.n;
    auto w = [&](int a, int b) { return graph.has_edge(a, b) ? graph.weight[a][b] : 0.0; };
    std::vector<std::vector<double>> cost(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v)
        cost[v] = color_costs(graph, colors, v, k);
    auto recolor = [&](int v, int c) {
        for (int j = 0; j < n; ++j) {
            if (j != v && graph.has_edge(v, j)) {
                cost[j][colors[v]] -= graph.weight[v][j];
                cost[j][c] += graph.weight[v][j];
            }
        }
        colors[v] = c;
    };
    double current = monochromatic_weight(graph, colors);
    const double tol = 1e-12 * std::max(1.0, current);
    bool improved = true;
    while (improved) {
        improved = false;
        for (int v : order) {
            int best = colors[v];
            for (int c = 0; c < k; ++c) {
                if (cost[v][c] < cost[v][best])
                    best = c;
            }
            const double delta = cost[v][best] - cost[v][colors[v]];
            if (best != colors[v] && delta < -tol) {
                recolor(v, best);
                current += delta;
                on_move(current);
                improved = true;
            }
        }
        if (improved)
            continue;
        for (int a = 0; a < n && !improved; ++a) {
            for (int b = a + 1; b < n && !improved; ++b) {
                const int ca = colors[a], cb = colors[b];
                if (ca == cb)
                    continue;
                const double delta = cost[a][cb] - cost[a][ca] + cost[b][ca] - cost[b][cb] - 2.0 * w(a, b);
                if (delta < -tol) {
                    recolor(a, cb);
                    recolor(b, ca);
                    current += delta;
                    on_move(current);
                    improved = true;
                }
            }
        }
    }
    return current;
}

constexpr int kCgcRestarts = 8;

} // namespace

AllocationVector cgc_allocate(const InterferenceGraph& graph, int k, std::vector<double>* trace)
{
    if (k < 1)
        throw std::invalid_argument("cgc_allocate: k must be >= 1");
    const int n = graph.n;
    std::vector<double> degree(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        degree[i] = graph.weighted_degree(i);

    if (trace)
        trace->clear();
    AllocationVector best;
    double best_weight = std::numeric_limits<double>::infinity();
    auto record = [&](double w) {
        if (trace && w < (trace->empty() ? std::numeric_limits<double>::infinity() : trace->back()))
            trace->push_back(w);
    };
    // Restart 0 orders by weighted degree; later restarts jitter the degrees
    // with a fixed generator so the result stays a function of the graph.
    Rng rng(mix_seed(static_cast<std::uint64_t>(n) * 31 + static_cast<std::uint64_t>(k)));
    std::uniform_real_distribution<double> jitter(0.5, 1.5);
    for (int r = 0; r < kCgcRestarts && best_weight > 0.0; ++r) {
        std::vector<double> key = degree;
        if (r > 0) {
            for (double& d : key)
                d *= jitter(rng);
        }
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key[a] > key[b]; });
        AllocationVector colors = greedy_coloring(graph, k, order);
        record(monochromatic_weight(graph, colors));
        local_search(graph, k, order, colors, record);
        const double exact = monochromatic_weight(graph, colors);
        if (exact < best_weight) {
            best_weight = exact;
            best = std::move(colors);
        }
    }
    return best;
}

AllocationVector match_labels(const AllocationVector& coloring, const AllocationVector& current, int k)
{
    if (coloring.size() != current.size())
        throw std::invalid_argument("match_labels: size mismatch");
    if (k > 8)
        return coloring;
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    int best_kept = -1;
    do {
        int kept = 0;
        for (std::size_t i = 0; i < coloring.size(); ++i) {
            if (perm[coloring[i]] == current[i])
                ++kept;
        }
        if (kept > best_kept) {
            best_kept = kept;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    AllocationVector out(coloring.size());
    for (std::size_t i = 0; i < coloring.size(); ++i)
        out[i] = best[coloring[i]];
    return out;
}

int greedy_select(std::span<const double> measurements)
{
    if (measurements.empty())
        throw std::invalid_argument("greedy_select: no measurements");
    int best = 0;
    for (std::size_t c = 1; c < measurements.size(); ++c) {
        if (measurements[c] > measurements[best])
            best = static_cast<int>(c);
    }
    return best;
}

AllocationVector random_allocate(int n, int k, std::uint64_t seed)
{
    if (n < 1 || k < 1)
        throw std::invalid_argument("random_allocate: n and k must be >= 1");
    Rng rng(mix_seed(seed));
    std::uniform_int_distribution<int> pick(0, k - 1);
    AllocationVector out(static_cast<std::size_t>(n));
    for (int& c : out)
        c = pick(rng);
    return out;
}

OracleResult brute_force_optimal(const Snapshot& snapshot, int k)
{
    const int n = snapshot.gains.subnetworks();
    if (k < 1 || k > snapshot.gains.channels())
        throw std::invalid_argument("brute_force_optimal: k outside the snapshot's channel range");
    if (std::pow(static_cast<double>(k), n) > kBruteForceLimit)
        throw InstanceTooLarge("brute_force_optimal: k^N exceeds 1e6 allocations");

    AllocationVector alloc(static_cast<std::size_t>(n), 0);
    OracleResult best;
    best.sum_rate_bps = -1.0;
    while (true) {
        const double rate = sum_rate_bps(snapshot.gains, alloc, snapshot.noise_mw, snapshot.radio);
        if (rate > best.sum_rate_bps) {
            best.sum_rate_bps = rate;
            best.allocation = alloc;
        }
        int pos = 0;
        while (pos < n && ++alloc[pos] == k) {
            alloc[pos] = 0;
            ++pos;
        }
        if (pos == n)
            break;
    }
    return best;
}

AllocationVector greedy_one_shot(const Snapshot& snapshot)
{
    const auto& g = snapshot.gains;
    AllocationVector out = snapshot.allocation;
    std::vector<double> per_channel(static_cast<std::size_t>(g.channels()));
    for (int n = 0; n < g.subnetworks(); ++n) {
        for (int k = 0; k < g.channels(); ++k) {
            double worst = std::numeric_limits<double>::infinity();
            for (int m = 0; m < g.devices_per_subnetwork(); ++m)
                worst = std::min(worst, sinr_on_channel(g, snapshot.allocation, n, m, k, snapshot.noise_mw));
            per_channel[k] = worst;
        }
        out[n] = greedy_select(per_channel);
    }
    return out;
}

} // namespace rrm
