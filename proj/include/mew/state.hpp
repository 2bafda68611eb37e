#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mew/partition.hpp"

namespace mew {

// order-independent 128-bit fingerprint pieces for vertex sets
inline std::uint64_t vertex_hash1(VertexId v) {
    return splitmix64(0x51ED2701A3C5F4D9ull + static_cast<std::uint64_t>(v));
}
inline std::uint64_t vertex_hash2(VertexId v) {
    return splitmix64(vertex_hash1(v) ^ 0xC2B2AE3D27D4EB4Full);
}

struct PartKey {
    std::uint64_t a = 0, b = 0;  // (sum of h1, xor of h2) over the part's vertices
    bool operator==(const PartKey&) const = default;
};
struct PartKeyHash {
    std::size_t operator()(const PartKey& k) const {
        return static_cast<std::size_t>(splitmix64(k.a ^ splitmix64(k.b)));
    }
};

PartKey part_key_of(std::span<const VertexId> vertices);

/*
 * Bookkeeping needed to move a MarkedTreeState one walk step forward: the
 * edge swaps plus the recomputed labels and tallies of every part touched by
 * the move. Built without mutating the state, so rejected proposals cost
 * nothing and accepted ones commit in O(touched region).
 */
struct StateDelta {
    EdgeId e_plus = -1, e_minus = -1;  // tree swap; absent or equal => tree unchanged
    EdgeId m_old = -1, m_new = -1;     // marked swap; absent or equal => marks unchanged

    std::vector<int> dirty_labels;       // stable part labels being rebuilt (sorted)
    std::vector<VertexId> region;        // all vertices of the dirty parts (sorted)
    std::vector<int> region_new_label;   // parallel to region

    // per dirty label (parallel to dirty_labels)
    std::vector<double> new_weight;
    std::vector<int> new_size;
    std::vector<VertexId> new_min_vertex;
    std::vector<PartKey> new_key;
    std::vector<std::vector<VertexId>> new_members;    // sorted
    std::vector<std::vector<double>> new_attr_sums;    // [attr][dirty index]

    struct EdgeRelabel {
        EdgeId e;
        int old_a, old_b;  // stable labels before (unordered pair)
        int new_a, new_b;
    };
    std::vector<EdgeRelabel> edge_relabels;
    int cut_delta = 0;
};

/*
 * The walk state (T, M): a spanning tree of the dual graph plus d-1 marked
 * tree edges. Deleting the marked edges from the tree yields the d connected
 * parts; the state keeps those labels, per-part tallies and the cut-edge
 * structure in sync incrementally. Labels are stable across moves; use
 * partition() for the canonical smallest-vertex ordering. Single-writer: one
 * chain owns one state.
 */
class MarkedTreeState {
public:
    // Builds all derived structures and validates every invariant (throws
    // MewError/ConfigError on violations, including balance).
    static MarkedTreeState create(const DualGraph& g, std::vector<EdgeId> tree_edges,
                                  std::vector<EdgeId> marked_edges, BalanceSpec balance);

    const DualGraph& graph() const { return *g_; }
    const BalanceSpec& balance() const { return balance_; }
    int part_count() const { return d_; }
    int vertex_count() const { return g_->vertex_count(); }

    bool in_tree(EdgeId e) const { return in_tree_[e] != 0; }
    bool is_marked(EdgeId e) const { return marked_flag_[e] != 0; }
    const std::vector<EdgeId>& marked_edges() const { return marked_; }
    const std::vector<EdgeId>& nontree_edges() const { return nontree_; }
    std::vector<EdgeId> tree_edges() const;

    // (neighbor, edge id) pairs, sorted by neighbor id
    const std::vector<std::pair<VertexId, EdgeId>>& tree_adjacency(VertexId v) const {
        return tree_adj_[v];
    }
    int tree_degree(VertexId v) const { return static_cast<int>(tree_adj_[v].size()); }

    // stable labels and per-part data
    const std::vector<int>& part_of() const { return part_of_; }
    const std::vector<VertexId>& part_members(int label) const { return part_members_[label]; }
    double part_weight(int label) const { return part_weight_[label]; }
    const std::vector<double>& part_weights() const { return part_weight_; }
    int part_size(int label) const { return part_size_[label]; }
    VertexId part_min_vertex(int label) const { return part_min_vertex_[label]; }
    PartKey part_key(int label) const { return part_key_[label]; }

    int cut_edge_count() const { return cut_count_; }
    // multiplicity of cut edges between stable labels i and j
    double cut_multiplicity(int i, int j) const;
    Multigraph quotient() const;  // over stable labels

    // Tracked per-vertex attribute columns (copied in); per-part sums are
    // maintained through moves. Returns the attribute slot index.
    int track_attribute(const std::vector<double>& column);
    int tracked_attributes() const { return static_cast<int>(attr_columns_.size()); }
    double part_attr_sum(int attr, int label) const { return part_attr_sums_[attr][label]; }
    const std::vector<double>& attr_column(int attr) const { return attr_columns_[attr]; }

    // canonical view: stable labels ordered by smallest contained vertex
    std::vector<int> canonical_of_stable() const;
    Partition partition() const;

    // balance-weight vector the state would have after applying `delta`
    std::vector<double> weights_after(const StateDelta& delta) const;

    void commit(const StateDelta& delta);

    // full recomputation of every derived structure (test cross-check mode)
    void rebuild_derived();
    // checks every invariant against a from-scratch recomputation; throws
    void validate() const;

private:
    const DualGraph* g_ = nullptr;
    BalanceSpec balance_;
    int d_ = 0;

    std::vector<char> in_tree_;
    std::vector<char> marked_flag_;
    std::vector<EdgeId> marked_;
    std::vector<EdgeId> nontree_;
    std::vector<int> nontree_pos_;  // EdgeId -> index in nontree_, or -1
    std::vector<std::vector<std::pair<VertexId, EdgeId>>> tree_adj_;

    std::vector<int> part_of_;
    std::vector<std::vector<VertexId>> part_members_;
    std::vector<double> part_weight_;
    std::vector<int> part_size_;
    std::vector<VertexId> part_min_vertex_;
    std::vector<PartKey> part_key_;
    std::vector<std::vector<double>> attr_columns_;
    std::vector<std::vector<double>> part_attr_sums_;

    std::vector<double> cut_mult_;  // d*d row-major, upper triangle used
    int cut_count_ = 0;
};

// partition_of: canonical partition induced by deleting the marked edges
inline Partition partition_of(const MarkedTreeState& s) { return s.partition(); }

// Uniform-spanning-tree initialization: draw a Wilson tree, then search for
// d-1 edges whose removal splits weight into balanced pieces by recursive
// bipartition; retry with a fresh tree on failure. Throws InitFailureError
// when max_attempts trees are exhausted, ConfigError on bad arguments.
MarkedTreeState initial_state(const DualGraph& g, int d, const BalanceSpec& balance,
                              RngStream& rng, int max_attempts);

}  // namespace mew
