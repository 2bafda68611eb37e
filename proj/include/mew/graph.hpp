#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mew/errors.hpp"
#include "mew/rng.hpp"

namespace mew {

using VertexId = int;
using EdgeId = int;

/*
 * Immutable dual graph: vertices are geographic units, edges join adjacent
 * units. Vertex ids are dense 0..n-1 in file order; external string ids are
 * kept only for output. Edge endpoints are stored normalized (min, max) and
 * EdgeIds index the canonical edge list.
 */
class DualGraph {
public:
    DualGraph() = default;

    // Programmatic constructor for fixtures and tests. Runs the same
    // validation as the JSON loader.
    static DualGraph from_edges(int vertex_count,
                                std::vector<std::pair<VertexId, VertexId>> edges,
                                std::vector<double> population);

    int vertex_count() const { return vertex_count_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }

    const std::pair<VertexId, VertexId>& endpoints(EdgeId e) const { return edges_[e]; }
    const std::vector<std::pair<VertexId, VertexId>>& edges() const { return edges_; }

    // (neighbor, edge id) pairs sorted by neighbor id
    const std::vector<std::pair<VertexId, EdgeId>>& adjacency(VertexId v) const {
        return adjacency_[v];
    }
    int degree(VertexId v) const { return static_cast<int>(adjacency_[v].size()); }

    // EdgeId of {a, b}, or -1 when absent
    EdgeId edge_between(VertexId a, VertexId b) const;

    const std::vector<double>& population() const { return population_; }
    double total_population() const { return total_population_; }

    bool has_votes() const { return dem_votes_.has_value(); }
    const std::vector<double>& dem_votes() const { return *dem_votes_; }
    const std::vector<double>& rep_votes() const { return *rep_votes_; }

    const std::vector<std::string>& external_ids() const { return external_ids_; }
    std::string external_id_or(VertexId v) const;
    const std::map<std::string, std::vector<double>>& extra_attrs() const { return extra_attrs_; }

    friend DualGraph load_dual_graph(std::istream& in);

private:
    void finalize();  // builds adjacency, validates, computes totals

    int vertex_count_ = 0;
    std::vector<std::pair<VertexId, VertexId>> edges_;
    std::vector<std::vector<std::pair<VertexId, EdgeId>>> adjacency_;
    std::unordered_map<std::uint64_t, EdgeId> edge_index_;
    std::vector<double> population_;
    double total_population_ = 0.0;
    std::optional<std::vector<double>> dem_votes_;
    std::optional<std::vector<double>> rep_votes_;
    std::map<std::string, std::vector<double>> extra_attrs_;
    std::vector<std::string> external_ids_;
};

DualGraph load_dual_graph(std::istream& in);
DualGraph load_dual_graph_file(const std::string& path);

// true iff the induced subgraph on `subset` is connected (empty -> false)
bool subset_connected(const DualGraph& g, std::span<const VertexId> subset);

// Small weighted multigraph, used for quotient graphs. Edge weights are the
// parallel-edge multiplicities.
struct Multigraph {
    int vertex_count = 0;
    std::vector<std::tuple<int, int, double>> edges;  // (u, v, multiplicity)
};

// ln of the spanning tree count of the induced subgraph on `subset`,
// by the matrix-tree theorem: log-determinant of an (n-1)x(n-1) principal
// minor of the Laplacian via a pivoted Cholesky (LDLT) factorization.
// Dense, O(n^3); fine for parts up to a few thousand vertices.
// A single vertex yields 0 (= ln 1). Throws DisconnectedSubsetError when the
// subset does not induce a connected subgraph (tree count zero).
double log_spanning_tree_count(const DualGraph& g, std::span<const VertexId> subset);

// Same, for an explicit multigraph with positive edge weights.
double log_spanning_tree_count(const Multigraph& q);

// Uniform spanning tree of the whole graph by Wilson's loop-erased random
// walk. Returns tree edges as EdgeIds.
std::vector<EdgeId> sample_spanning_tree(const DualGraph& g, RngStream& rng);

}  // namespace mew
