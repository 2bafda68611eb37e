#include "mew/graph.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mew {

namespace {

std::uint64_t pair_key(VertexId a, VertexId b, int n) {
    if (a > b) std::swap(a, b);
    return static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(n) +
           static_cast<std::uint64_t>(b);
}

}  // namespace

DualGraph DualGraph::from_edges(int vertex_count,
                                std::vector<std::pair<VertexId, VertexId>> edges,
                                std::vector<double> population) {
    DualGraph g;
    g.vertex_count_ = vertex_count;
    g.edges_ = std::move(edges);
    g.population_ = std::move(population);
    g.external_ids_.resize(vertex_count);
    for (int v = 0; v < vertex_count; ++v) g.external_ids_[v] = std::to_string(v);
    g.finalize();
    return g;
}

EdgeId DualGraph::edge_between(VertexId a, VertexId b) const {
    auto it = edge_index_.find(pair_key(a, b, vertex_count_));
    return it == edge_index_.end() ? -1 : it->second;
}

void DualGraph::finalize() {
    const int n = vertex_count_;
    if (n <= 0) throw ParseError("dual graph has no vertices");
    if (static_cast<int>(population_.size()) != n)
        throw MissingPopulationError("population attribute missing");
    for (double p : population_) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw ParseError("population values must be finite and non-negative");
    }

    adjacency_.assign(n, {});
    edge_index_.clear();
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        auto& [a, b] = edges_[i];
        if (a < 0 || a >= n || b < 0 || b >= n)
            throw ParseError("edge endpoint out of range");
        if (a == b)
            throw SelfLoopError("self-loop on vertex " + external_id_or(a));
        if (a > b) std::swap(a, b);
        auto [it, fresh] = edge_index_.emplace(pair_key(a, b, n), static_cast<EdgeId>(i));
        if (!fresh)
            throw DuplicateEdgeError("duplicate edge {" + external_id_or(a) + ", " +
                                     external_id_or(b) + "}");
        adjacency_[a].emplace_back(b, static_cast<EdgeId>(i));
        adjacency_[b].emplace_back(a, static_cast<EdgeId>(i));
    }
    for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());

    // connectivity
    std::vector<char> seen(n, 0);
    std::vector<VertexId> stack{0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
        VertexId v = stack.back();
        stack.pop_back();
        for (auto [w, e] : adjacency_[v]) {
            (void)e;
            if (!seen[w]) {
                seen[w] = 1;
                ++reached;
                stack.push_back(w);
            }
        }
    }
    if (reached != n) throw DisconnectedGraphError("dual graph is not connected");

    total_population_ = 0.0;
    for (double p : population_) total_population_ += p;
}

std::string DualGraph::external_id_or(VertexId v) const {
    if (v >= 0 && v < static_cast<int>(external_ids_.size()) && !external_ids_[v].empty())
        return external_ids_[v];
    return std::to_string(v);
}

DualGraph load_dual_graph(std::istream& in) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("dual graph JSON parse failure: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("vertices") || !doc["vertices"].is_array())
        throw ParseError("dual graph JSON must be an object with a \"vertices\" array");
    if (!doc.contains("edges") || !doc["edges"].is_array())
        throw ParseError("dual graph JSON must contain an \"edges\" array");

    DualGraph g;
    const auto& verts = doc["vertices"];
    const int n = static_cast<int>(verts.size());
    g.vertex_count_ = n;
    g.external_ids_.reserve(n);
    g.population_.assign(n, 0.0);

    std::unordered_map<std::string, VertexId> id_of;
    std::vector<double> dem(n, 0.0), rep(n, 0.0);
    bool any_dem = false, any_rep = false;

    for (int v = 0; v < n; ++v) {
        const auto& jv = verts[v];
        if (!jv.is_object() || !jv.contains("id") || !jv["id"].is_string())
            throw ParseError("each vertex must be an object with a string \"id\"");
        std::string id = jv["id"].get<std::string>();
        if (!id_of.emplace(id, v).second)
            throw ParseError("duplicate vertex id \"" + id + "\"");
        g.external_ids_.push_back(id);
        if (!jv.contains("population") || !jv["population"].is_number())
            throw MissingPopulationError("vertex \"" + id + "\" has no population attribute");
        g.population_[v] = jv["population"].get<double>();
        for (auto it = jv.begin(); it != jv.end(); ++it) {
            if (it.key() == "id" || it.key() == "population") continue;
            if (!it.value().is_number()) continue;
            double x = it.value().get<double>();
            if (it.key() == "dem_votes") {
                dem[v] = x;
                any_dem = true;
            } else if (it.key() == "rep_votes") {
                rep[v] = x;
                any_rep = true;
            } else {
                auto& col = g.extra_attrs_[it.key()];
                col.resize(n, 0.0);
                col[v] = x;
            }
        }
    }
    for (auto& [name, col] : g.extra_attrs_) col.resize(n, 0.0);
    if (any_dem || any_rep) {
        g.dem_votes_ = std::move(dem);
        g.rep_votes_ = std::move(rep);
    }

    for (const auto& je : doc["edges"]) {
        if (!je.is_array() || je.size() != 2 || !je[0].is_string() || !je[1].is_string())
            throw ParseError("each edge must be a pair of vertex id strings");
        auto ia = id_of.find(je[0].get<std::string>());
        auto ib = id_of.find(je[1].get<std::string>());
        if (ia == id_of.end() || ib == id_of.end())
            throw ParseError("edge references unknown vertex id");
        g.edges_.emplace_back(ia->second, ib->second);
    }

    g.finalize();
    return g;
}

DualGraph load_dual_graph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open graph file: " + path);
    return load_dual_graph(in);
}

bool subset_connected(const DualGraph& g, std::span<const VertexId> subset) {
    if (subset.empty()) return false;
    std::vector<int> rank(g.vertex_count(), -1);
    for (std::size_t i = 0; i < subset.size(); ++i) rank[subset[i]] = static_cast<int>(i);
    std::vector<char> seen(subset.size(), 0);
    std::vector<VertexId> stack{subset[0]};
    seen[rank[subset[0]]] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
        VertexId v = stack.back();
        stack.pop_back();
        for (auto [w, e] : g.adjacency(v)) {
            (void)e;
            if (rank[w] >= 0 && !seen[rank[w]]) {
                seen[rank[w]] = 1;
                ++reached;
                stack.push_back(w);
            }
        }
    }
    return reached == subset.size();
}

namespace {

// log-determinant of the Laplacian minor (vertex `skip` removed) of a
// weighted graph given as an edge list over 0..n-1
double laplacian_minor_logdet(int n, const std::vector<std::tuple<int, int, double>>& edges) {
    if (n == 1) return 0.0;  // single vertex: one (empty) spanning tree
    const int m = n - 1;     // drop the last vertex
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(m, m);
    for (const auto& [a, b, w] : edges) {
        if (a < m) lap(a, a) += w;
        if (b < m) lap(b, b) += w;
        if (a < m && b < m) {
            lap(a, b) -= w;
            lap(b, a) -= w;
        }
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(lap);
    double logdet = 0.0;
    const auto& d = ldlt.vectorD();
    for (int i = 0; i < m; ++i) {
        if (!(d(i) > 0.0))
            throw DisconnectedSubsetError("Laplacian minor is singular: subgraph disconnected");
        logdet += std::log(d(i));
    }
    return logdet;
}

}  // namespace

double log_spanning_tree_count(const DualGraph& g, std::span<const VertexId> subset) {
    if (subset.empty()) throw DisconnectedSubsetError("empty vertex subset has no spanning tree");
    if (!subset_connected(g, subset))
        throw DisconnectedSubsetError("vertex subset does not induce a connected subgraph");
    if (subset.size() == 1) return 0.0;

    std::vector<int> rank(g.vertex_count(), -1);
    for (std::size_t i = 0; i < subset.size(); ++i) rank[subset[i]] = static_cast<int>(i);
    std::vector<std::tuple<int, int, double>> edges;
    for (VertexId v : subset) {
        for (auto [w, e] : g.adjacency(v)) {
            (void)e;
            if (v < w && rank[w] >= 0) edges.emplace_back(rank[v], rank[w], 1.0);
        }
    }
    return laplacian_minor_logdet(static_cast<int>(subset.size()), edges);
}

double log_spanning_tree_count(const Multigraph& q) {
    if (q.vertex_count <= 0)
        throw DisconnectedSubsetError("empty multigraph has no spanning tree");
    if (q.vertex_count == 1) return 0.0;
    // connectivity over the multigraph
    std::vector<std::vector<int>> adj(q.vertex_count);
    for (const auto& [a, b, w] : q.edges) {
        if (w <= 0.0) throw MewError("multigraph edge multiplicities must be positive");
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<char> seen(q.vertex_count, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int w : adj[v])
            if (!seen[w]) {
                seen[w] = 1;
                ++reached;
                stack.push_back(w);
            }
    }
    if (reached != q.vertex_count)
        throw DisconnectedSubsetError("multigraph disconnected: spanning tree count is zero");
    return laplacian_minor_logdet(q.vertex_count, q.edges);
}

std::vector<EdgeId> sample_spanning_tree(const DualGraph& g, RngStream& rng) {
    const int n = g.vertex_count();
    std::vector<char> in_tree(n, 0);
    std::vector<EdgeId> next_edge(n, -1);
    std::vector<VertexId> next_vertex(n, -1);
    std::vector<EdgeId> tree;
    tree.reserve(n - 1);

    in_tree[0] = 1;
    for (VertexId start = 1; start < n; ++start) {
        if (in_tree[start]) continue;
        // random walk from start until the tree is hit; next_* overwriting
        // performs the loop erasure
        VertexId v = start;
        while (!in_tree[v]) {
            const auto& nbrs = g.adjacency(v);
            auto [w, e] = nbrs[rng.uniform_index(nbrs.size())];
            next_vertex[v] = w;
            next_edge[v] = e;
            v = w;
        }
        v = start;
        while (!in_tree[v]) {
            in_tree[v] = 1;
            tree.push_back(next_edge[v]);
            v = next_vertex[v];
        }
    }
    return tree;
}

}  // namespace mew
