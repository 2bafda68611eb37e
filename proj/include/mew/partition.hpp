#pragma once

#include <cstdint>
#include <vector>

#include "mew/graph.hpp"

namespace mew {

// Assignment of every vertex to one of d parts. Labels are 0-based. A valid
// partition has every part non-empty and connected in the dual graph.
struct Partition {
    std::vector<int> assignment;
    int d = 0;

    bool operator==(const Partition& other) const = default;
};

// Relabels so that parts appear in order of their smallest contained vertex
// (the part containing vertex 0 becomes part 0, and so on).
Partition canonicalized(const Partition& p);

// Throws MewError on label range violations, empty parts, or a disconnected
// part.
void validate_partition(const DualGraph& g, const Partition& p);

// Order-independent 64-bit fingerprint of the canonical assignment.
std::uint64_t partition_fingerprint(const Partition& p);

enum class BalanceMode { population, node };

struct BalanceSpec {
    BalanceMode mode = BalanceMode::population;
    double epsilon = 0.0;  // relative tolerance on the ideal part weight W/d
};

// balance weight of one vertex under the spec
inline double balance_weight(const DualGraph& g, const BalanceSpec& spec, VertexId v) {
    return spec.mode == BalanceMode::population ? g.population()[v] : 1.0;
}

double total_balance_weight(const DualGraph& g, const BalanceSpec& spec);

std::vector<double> part_weights(const DualGraph& g, const Partition& p, const BalanceSpec& spec);

// true iff every part weight lies in [W/d (1-eps), W/d (1+eps)], inclusive
bool is_balanced(const Partition& p, const DualGraph& g, const BalanceSpec& spec);
bool weights_balanced(const std::vector<double>& weights, double total, int d, double epsilon);

// Quotient multigraph: one vertex per part, edge multiplicity between parts
// i != j equal to the number of cut edges of g joining them.
Multigraph quotient_multigraph(const DualGraph& g, const Partition& p);

}  // namespace mew
