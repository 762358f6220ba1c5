#pragma once

// Non-learning channel allocators: centralized graph coloring, greedy SINR
// selection, random allocation and an exhaustive oracle for small instances.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "rrm/env.hpp"

namespace rrm {

/// Mutual-coupling graph. Vertex i selects its K-1 strongest interferers;
/// an edge exists when either endpoint selected the other.
struct InterferenceGraph {
    int n = 0;
    std::vector<std::vector<int>> selected;        // [i] -> K-1 strongest interferers of i
    std::vector<std::vector<double>> weight;       // symmetric, valid where has_edge
    std::vector<std::vector<char>> edge;           // adjacency

    bool has_edge(int i, int j) const { return edge[i][j] != 0; }
    double weighted_degree(int i) const;
    std::vector<int> neighbors(int i) const;
};

/// pairwise[i][j] is the power of j received at i; it is symmetrized by max.
/// Throws std::invalid_argument for a non-square or negative matrix.
InterferenceGraph build_graph(const std::vector<std::vector<double>>& pairwise, int k);

/// Total weight of edges whose endpoints share a channel.
double monochromatic_weight(const InterferenceGraph& graph, const AllocationVector& colors);

/// Greedy coloring (saturation first, then weighted degree) refined by
/// single-vertex recolorings and two-vertex color exchanges until no move
/// lowers the monochromatic weight; a few restarts from jittered degree orders
/// keep the best result. Deterministic in the graph. If trace is given it
/// receives a non-increasing sequence: the best weight after every improvement.
AllocationVector cgc_allocate(const InterferenceGraph& graph, int k, std::vector<double>* trace = nullptr);

/// Renames the colors of a coloring so that as many vertices as possible keep
/// their current channel (exhaustive over permutations for k <= 8).
AllocationVector match_labels(const AllocationVector& coloring, const AllocationVector& current, int k);

/// Channel with the highest measurement; ties to the lowest index.
int greedy_select(std::span<const double> measurements);

/// I.i.d. uniform channels in [0, k).
AllocationVector random_allocate(int n, int k, std::uint64_t seed);

class InstanceTooLarge : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct OracleResult {
    AllocationVector allocation;
    double sum_rate_bps = 0.0;
};

inline constexpr double kBruteForceLimit = 1e6;

/// Exhaustive maximizer of the sum rate over all k^N allocations of the
/// frozen gains. Throws InstanceTooLarge when k^N > 1e6.
OracleResult brute_force_optimal(const Snapshot& snapshot, int k);

/// Every subnetwork simultaneously moves to its best measured channel (SINR,
/// worst device) under the snapshot's allocation.
AllocationVector greedy_one_shot(const Snapshot& snapshot);

} // namespace rrm
