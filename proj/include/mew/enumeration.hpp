#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "mew/energy.hpp"
#include "mew/partition.hpp"

namespace mew {

// All balanced connected d-partitions of a graph, in deterministic
// (recursion) order with canonical labels. exact_log_weights holds ln of the
// target's unnormalized mass once exact_target_distribution has run (zero
// before that).
struct PartitionCatalog {
    std::vector<Partition> partitions;
    std::vector<double> exact_log_weights;

    int index_of(const Partition& p) const;  // -1 when absent

    void rebuild_index();
    std::unordered_multimap<std::uint64_t, int> fingerprint_index;
};

// Recursive connected-subgraph growth with weight pruning: part k grows from
// the smallest unassigned vertex, branches are cut when the remaining weight
// cannot balance. The guard counts search-tree nodes and throws
// WorkLimitError past work_limit.
PartitionCatalog enumerate_partitions(const DualGraph& g, int d, const BalanceSpec& balance,
                                      std::uint64_t work_limit = 50'000'000);

struct LiftedState {
    std::vector<EdgeId> tree;    // sorted
    std::vector<EdgeId> marked;  // sorted
    bool operator==(const LiftedState&) const = default;
};

// Every spanning tree (recursive edge inclusion/exclusion with connectivity
// pruning) crossed with every (d-1)-subset of its edges whose removal yields
// a balanced forest. Tiny graphs only.
std::vector<LiftedState> enumerate_lifted_states(const DualGraph& g, int d,
                                                 const BalanceSpec& balance,
                                                 std::uint64_t work_limit = 50'000'000);

// Exact induced law over the catalog: pi(xi) proportional to exp(J(xi)) (the
// degeneracy factor cancels against state multiplicity when projecting to
// partitions); for the spanning-tree form pi(xi) proportional to tau(xi).
// Normalized by log-sum-exp; writes catalog.exact_log_weights.
std::vector<double> exact_target_distribution(PartitionCatalog& catalog, const DualGraph& g,
                                              const EnergyModel& model);

// d=2 independent spanning-tree-distribution baseline: draw a Wilson tree,
// list the edges whose removal balances the two sides, redraw when none, pick
// one uniformly. Caveat: per-tree multiplicity of balanced edges weights this
// sampler; validate it against the exact catalog before trusting it.
Partition recom2_baseline_sample(const DualGraph& g, const BalanceSpec& balance, RngStream& rng,
                                 int max_attempts = 100000);

}  // namespace mew
