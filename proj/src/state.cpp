#include "mew/state.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mew {

PartKey part_key_of(std::span<const VertexId> vertices) {
    PartKey k;
    for (VertexId v : vertices) {
        k.a += vertex_hash1(v);
        k.b ^= vertex_hash2(v);
    }
    return k;
}

std::vector<EdgeId> MarkedTreeState::tree_edges() const {
    std::vector<EdgeId> out;
    out.reserve(g_->vertex_count() - 1);
    for (EdgeId e = 0; e < g_->edge_count(); ++e)
        if (in_tree_[e]) out.push_back(e);
    return out;
}

double MarkedTreeState::cut_multiplicity(int i, int j) const {
    if (i > j) std::swap(i, j);
    return cut_mult_[static_cast<std::size_t>(i) * d_ + j];
}

Multigraph MarkedTreeState::quotient() const {
    Multigraph q;
    q.vertex_count = d_;
    for (int i = 0; i < d_; ++i)
        for (int j = i + 1; j < d_; ++j) {
            double m = cut_mult_[static_cast<std::size_t>(i) * d_ + j];
            if (m > 0.0) q.edges.emplace_back(i, j, m);
        }
    return q;
}

int MarkedTreeState::track_attribute(const std::vector<double>& column) {
    if (static_cast<int>(column.size()) != g_->vertex_count())
        throw MewError("tracked attribute column length mismatch");
    attr_columns_.push_back(column);
    std::vector<double> sums(d_, 0.0);
    for (VertexId v = 0; v < g_->vertex_count(); ++v) sums[part_of_[v]] += column[v];
    part_attr_sums_.push_back(std::move(sums));
    return static_cast<int>(attr_columns_.size()) - 1;
}

std::vector<int> MarkedTreeState::canonical_of_stable() const {
    std::vector<int> order(d_);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return part_min_vertex_[a] < part_min_vertex_[b]; });
    std::vector<int> canon(d_);
    for (int c = 0; c < d_; ++c) canon[order[c]] = c;
    return canon;
}

Partition MarkedTreeState::partition() const {
    std::vector<int> canon = canonical_of_stable();
    Partition p;
    p.d = d_;
    p.assignment.resize(part_of_.size());
    for (std::size_t v = 0; v < part_of_.size(); ++v) p.assignment[v] = canon[part_of_[v]];
    return p;
}

std::vector<double> MarkedTreeState::weights_after(const StateDelta& delta) const {
    std::vector<double> w = part_weight_;
    for (std::size_t i = 0; i < delta.dirty_labels.size(); ++i)
        w[delta.dirty_labels[i]] = delta.new_weight[i];
    return w;
}

MarkedTreeState MarkedTreeState::create(const DualGraph& g, std::vector<EdgeId> tree_edges,
                                        std::vector<EdgeId> marked_edges, BalanceSpec balance) {
    if (!(balance.epsilon >= 0.0) || balance.epsilon >= 1.0)
        throw ConfigError("balance epsilon must lie in [0, 1)");
    MarkedTreeState s;
    s.g_ = &g;
    s.balance_ = balance;
    s.d_ = static_cast<int>(marked_edges.size()) + 1;

    const int n = g.vertex_count();
    const int m = g.edge_count();
    if (static_cast<int>(tree_edges.size()) != n - 1)
        throw MewError("spanning tree must have n-1 edges");
    s.in_tree_.assign(m, 0);
    for (EdgeId e : tree_edges) {
        if (e < 0 || e >= m) throw MewError("tree edge id out of range");
        if (s.in_tree_[e]) throw MewError("duplicate tree edge");
        s.in_tree_[e] = 1;
    }
    s.marked_flag_.assign(m, 0);
    s.marked_ = std::move(marked_edges);
    for (EdgeId e : s.marked_) {
        if (e < 0 || e >= m || !s.in_tree_[e]) throw MewError("marked edge not a tree edge");
        if (s.marked_flag_[e]) throw MewError("duplicate marked edge");
        s.marked_flag_[e] = 1;
    }

    s.rebuild_derived();
    s.validate();
    return s;
}

void MarkedTreeState::rebuild_derived() {
    const DualGraph& g = *g_;
    const int n = g.vertex_count();
    const int m = g.edge_count();

    tree_adj_.assign(n, {});
    for (EdgeId e = 0; e < m; ++e) {
        if (!in_tree_[e]) continue;
        auto [a, b] = g.endpoints(e);
        tree_adj_[a].emplace_back(b, e);
        tree_adj_[b].emplace_back(a, e);
    }
    for (auto& nbrs : tree_adj_) std::sort(nbrs.begin(), nbrs.end());

    nontree_.clear();
    nontree_pos_.assign(m, -1);
    for (EdgeId e = 0; e < m; ++e) {
        if (!in_tree_[e]) {
            nontree_pos_[e] = static_cast<int>(nontree_.size());
            nontree_.push_back(e);
        }
    }

    // components of T \ M in order of smallest contained vertex
    part_of_.assign(n, -1);
    part_members_.assign(d_, {});
    part_weight_.assign(d_, 0.0);
    part_size_.assign(d_, 0);
    part_min_vertex_.assign(d_, -1);
    part_key_.assign(d_, PartKey{});
    int label = 0;
    std::vector<VertexId> stack;
    for (VertexId root = 0; root < n; ++root) {
        if (part_of_[root] >= 0) continue;
        if (label >= d_) throw MewError("forest has more components than marked edges allow");
        stack.push_back(root);
        part_of_[root] = label;
        while (!stack.empty()) {
            VertexId v = stack.back();
            stack.pop_back();
            part_members_[label].push_back(v);
            part_weight_[label] += balance_weight(g, balance_, v);
            ++part_size_[label];
            part_key_[label].a += vertex_hash1(v);
            part_key_[label].b ^= vertex_hash2(v);
            for (auto [w, e] : tree_adj_[v]) {
                if (marked_flag_[e] || part_of_[w] >= 0) continue;
                part_of_[w] = label;
                stack.push_back(w);
            }
        }
        part_min_vertex_[label] = root;
        std::sort(part_members_[label].begin(), part_members_[label].end());
        ++label;
    }
    if (label != d_) throw MewError("forest has fewer components than marked edges require");

    for (std::size_t a = 0; a < attr_columns_.size(); ++a) {
        auto& sums = part_attr_sums_[a];
        sums.assign(d_, 0.0);
        for (VertexId v = 0; v < n; ++v) sums[part_of_[v]] += attr_columns_[a][v];
    }

    cut_mult_.assign(static_cast<std::size_t>(d_) * d_, 0.0);
    cut_count_ = 0;
    for (EdgeId e = 0; e < m; ++e) {
        auto [a, b] = g.endpoints(e);
        int pa = part_of_[a], pb = part_of_[b];
        if (pa == pb) continue;
        if (pa > pb) std::swap(pa, pb);
        cut_mult_[static_cast<std::size_t>(pa) * d_ + pb] += 1.0;
        ++cut_count_;
    }
}

void MarkedTreeState::validate() const {
    const DualGraph& g = *g_;
    const int n = g.vertex_count();

    // spanning tree: n-1 edges and connected
    int tree_edge_count = 0;
    for (char f : in_tree_) tree_edge_count += f;
    if (tree_edge_count != n - 1) throw MewError("state invariant: tree edge count != n-1");
    {
        std::size_t arcs = 0;
        for (VertexId v = 0; v < n; ++v) {
            arcs += tree_adj_[v].size();
            for (auto [w, e] : tree_adj_[v]) {
                if (!in_tree_[e]) throw MewError("state invariant: adjacency lists a non-tree edge");
                auto [a, b] = g.endpoints(e);
                if ((a != v || b != w) && (a != w || b != v))
                    throw MewError("state invariant: adjacency endpoint mismatch");
            }
        }
        if (arcs != 2 * static_cast<std::size_t>(n - 1))
            throw MewError("state invariant: adjacency arc count != 2(n-1)");
        std::vector<char> seen(n, 0);
        std::vector<VertexId> stack{0};
        seen[0] = 1;
        int reached = 1;
        while (!stack.empty()) {
            VertexId v = stack.back();
            stack.pop_back();
            for (auto [w, e] : tree_adj_[v]) {
                (void)e;
                if (!seen[w]) {
                    seen[w] = 1;
                    ++reached;
                    stack.push_back(w);
                }
            }
        }
        if (reached != n) throw MewError("state invariant: tree is not spanning");
    }

    if (static_cast<int>(marked_.size()) != d_ - 1)
        throw MewError("state invariant: |M| != d-1");
    for (EdgeId e : marked_)
        if (!in_tree_[e] || !marked_flag_[e])
            throw MewError("state invariant: marked set inconsistent");

    // compare every derived structure against a fresh rebuild
    MarkedTreeState fresh = *this;
    fresh.rebuild_derived();
    if (fresh.part_of_.size() != part_of_.size())
        throw MewError("state invariant: label array size");
    // stable labels may differ from fresh (discovery-order) labels; compare as
    // canonical partitions
    if (canonicalized(Partition{part_of_, d_}) != canonicalized(Partition{fresh.part_of_, d_}))
        throw MewError("state invariant: part labels disagree with recomputation");
    if (cut_count_ != fresh.cut_count_)
        throw MewError("state invariant: cut count disagrees with recomputation");
    for (int lbl = 0; lbl < d_; ++lbl) {
        int fresh_lbl = fresh.part_of_[part_members_[lbl].empty() ? 0 : part_members_[lbl][0]];
        if (part_members_[lbl] != fresh.part_members_[fresh_lbl])
            throw MewError("state invariant: member lists disagree with recomputation");
        if (std::abs(part_weight_[lbl] - fresh.part_weight_[fresh_lbl]) >
            1e-9 * (1.0 + std::abs(part_weight_[lbl])))
            throw MewError("state invariant: part weight disagrees with recomputation");
        if (part_size_[lbl] != fresh.part_size_[fresh_lbl])
            throw MewError("state invariant: part size disagrees with recomputation");
        if (part_min_vertex_[lbl] != fresh.part_min_vertex_[fresh_lbl])
            throw MewError("state invariant: part min vertex disagrees with recomputation");
        if (!(part_key_[lbl] == fresh.part_key_[fresh_lbl]))
            throw MewError("state invariant: part fingerprint disagrees with recomputation");
        for (std::size_t a = 0; a < attr_columns_.size(); ++a)
            if (std::abs(part_attr_sums_[a][lbl] - fresh.part_attr_sums_[a][fresh_lbl]) >
                1e-9 * (1.0 + std::abs(part_attr_sums_[a][lbl])))
                throw MewError("state invariant: attribute sums disagree with recomputation");
    }

    // nontree bookkeeping
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
        if (in_tree_[e] && nontree_pos_[e] != -1)
            throw MewError("state invariant: tree edge in nontree list");
        if (!in_tree_[e] &&
            (nontree_pos_[e] < 0 || nontree_[nontree_pos_[e]] != e))
            throw MewError("state invariant: nontree position table broken");
    }

    if (!weights_balanced(part_weight_, total_balance_weight(g, balance_), d_, balance_.epsilon))
        throw MewError("state invariant: partition is not balanced");

    validate_partition(g, Partition{part_of_, d_});
}

void MarkedTreeState::commit(const StateDelta& delta) {
    const DualGraph& g = *g_;

    // tree swap
    if (delta.e_plus >= 0 && delta.e_minus >= 0 && delta.e_plus != delta.e_minus) {
        auto remove_arc = [&](VertexId v, EdgeId e) {
            auto& nbrs = tree_adj_[v];
            for (std::size_t i = 0; i < nbrs.size(); ++i) {
                if (nbrs[i].second == e) {
                    nbrs.erase(nbrs.begin() + i);
                    return;
                }
            }
            throw MewError("commit: edge missing from tree adjacency");
        };
        auto insert_arc = [&](VertexId v, VertexId w, EdgeId e) {
            auto& nbrs = tree_adj_[v];
            auto it = std::lower_bound(nbrs.begin(), nbrs.end(), std::make_pair(w, e));
            nbrs.insert(it, {w, e});
        };
        auto [ra, rb] = g.endpoints(delta.e_minus);
        remove_arc(ra, delta.e_minus);
        remove_arc(rb, delta.e_minus);
        auto [aa, ab] = g.endpoints(delta.e_plus);
        insert_arc(aa, ab, delta.e_plus);
        insert_arc(ab, aa, delta.e_plus);
        in_tree_[delta.e_minus] = 0;
        in_tree_[delta.e_plus] = 1;
        int slot = nontree_pos_[delta.e_plus];
        nontree_[slot] = delta.e_minus;
        nontree_pos_[delta.e_minus] = slot;
        nontree_pos_[delta.e_plus] = -1;
    }

    // marked swap
    if (delta.m_old >= 0 && delta.m_new >= 0 && delta.m_old != delta.m_new) {
        if (marked_flag_[delta.m_new]) throw MewError("commit: marked-edge collision");
        marked_flag_[delta.m_old] = 0;
        marked_flag_[delta.m_new] = 1;
        for (auto& e : marked_)
            if (e == delta.m_old) {
                e = delta.m_new;
                break;
            }
    }

    // relabel the touched region and its tallies
    for (std::size_t i = 0; i < delta.region.size(); ++i)
        part_of_[delta.region[i]] = delta.region_new_label[i];
    for (std::size_t i = 0; i < delta.dirty_labels.size(); ++i) {
        int lbl = delta.dirty_labels[i];
        part_weight_[lbl] = delta.new_weight[i];
        part_size_[lbl] = delta.new_size[i];
        part_min_vertex_[lbl] = delta.new_min_vertex[i];
        part_key_[lbl] = delta.new_key[i];
        part_members_[lbl] = delta.new_members[i];
        for (std::size_t a = 0; a < attr_columns_.size(); ++a)
            part_attr_sums_[a][lbl] = delta.new_attr_sums[a][i];
    }

    // cut structure
    for (const auto& ev : delta.edge_relabels) {
        if (ev.old_a != ev.old_b) {
            int i = std::min(ev.old_a, ev.old_b), j = std::max(ev.old_a, ev.old_b);
            cut_mult_[static_cast<std::size_t>(i) * d_ + j] -= 1.0;
            --cut_count_;
        }
        if (ev.new_a != ev.new_b) {
            int i = std::min(ev.new_a, ev.new_b), j = std::max(ev.new_a, ev.new_b);
            cut_mult_[static_cast<std::size_t>(i) * d_ + j] += 1.0;
            ++cut_count_;
        }
    }
}

namespace {

// Recursive balanced-split search over one spanning tree: find parts_needed-1
// edges whose removal cuts `vertices` (a subtree of the tree) into weight
// chunks within tolerance of multiples of the ideal part weight.
struct SplitSearch {
    const DualGraph& g;
    const BalanceSpec& spec;
    double ideal;        // W/d
    double tol;          // epsilon * ideal
    RngStream& rng;
    const std::vector<std::vector<std::pair<VertexId, EdgeId>>>& adj;  // full-tree adjacency
    long budget = 0;

    bool split(std::vector<VertexId> vertices, int parts_needed, std::vector<EdgeId>& marks) {
        if (--budget < 0) return false;
        double total = 0.0;
        for (VertexId v : vertices) total += balance_weight(g, spec, v);
        if (parts_needed == 1) {
            // same comparison weights_balanced() applies to the final state
            return total >= ideal * (1.0 - spec.epsilon) && total <= ideal * (1.0 + spec.epsilon);
        }

        // root the chunk at vertices[0]; parent pointers + subtree weights
        const VertexId root = vertices[0];
        std::vector<char> in_chunk(g.vertex_count(), 0);
        for (VertexId v : vertices) in_chunk[v] = 1;
        std::vector<VertexId> order;
        order.reserve(vertices.size());
        std::vector<VertexId> parent(g.vertex_count(), -1);
        std::vector<EdgeId> parent_edge(g.vertex_count(), -1);
        std::vector<VertexId> stack{root};
        std::vector<char> seen(g.vertex_count(), 0);
        seen[root] = 1;
        while (!stack.empty()) {
            VertexId v = stack.back();
            stack.pop_back();
            order.push_back(v);
            for (auto [w, e] : adj[v]) {
                if (!in_chunk[w] || seen[w]) continue;
                seen[w] = 1;
                parent[w] = v;
                parent_edge[w] = e;
                stack.push_back(w);
            }
        }
        if (order.size() != vertices.size()) return false;  // chunk not connected (cannot happen)

        std::vector<double> subtree(g.vertex_count(), 0.0);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            subtree[*it] += balance_weight(g, spec, *it);
            if (parent[*it] >= 0) subtree[parent[*it]] += subtree[*it];
        }

        // candidate cuts in random order
        std::vector<VertexId> cut_candidates(order.begin() + 1, order.end());
        for (std::size_t i = cut_candidates.size(); i > 1; --i)
            std::swap(cut_candidates[i - 1], cut_candidates[rng.uniform_index(i)]);

        for (VertexId below : cut_candidates) {
            double wa = subtree[below];
            for (int k = 1; k < parts_needed; ++k) {
                if (std::abs(wa - k * ideal) > tol + 1e-12 * ideal) continue;
                // side A = rooted subtree below the cut edge (child arcs only)
                std::vector<VertexId> side_a;
                side_a.reserve(vertices.size());
                std::vector<VertexId> dfs{below};
                std::vector<char> in_a(g.vertex_count(), 0);
                in_a[below] = 1;
                while (!dfs.empty()) {
                    VertexId v = dfs.back();
                    dfs.pop_back();
                    side_a.push_back(v);
                    for (auto [w, e] : adj[v]) {
                        (void)e;
                        if (in_chunk[w] && !in_a[w] && parent[w] == v) {
                            in_a[w] = 1;
                            dfs.push_back(w);
                        }
                    }
                }
                std::vector<VertexId> side_b;
                side_b.reserve(vertices.size() - side_a.size());
                for (VertexId v : vertices)
                    if (!in_a[v]) side_b.push_back(v);

                std::vector<EdgeId> sub_marks;
                if (split(side_a, k, sub_marks) && split(side_b, parts_needed - k, sub_marks)) {
                    marks.push_back(parent_edge[below]);
                    marks.insert(marks.end(), sub_marks.begin(), sub_marks.end());
                    return true;
                }
                if (budget < 0) return false;
            }
        }
        return false;
    }
};

}  // namespace

MarkedTreeState initial_state(const DualGraph& g, int d, const BalanceSpec& balance,
                              RngStream& rng, int max_attempts) {
    const int n = g.vertex_count();
    if (d < 2) throw ConfigError("initial_state requires d >= 2");
    if (d > n) throw ConfigError("more parts than vertices");
    if (max_attempts < 1) throw ConfigError("max_attempts must be positive");

    const double total = total_balance_weight(g, balance);
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        std::vector<EdgeId> tree = sample_spanning_tree(g, rng);
        std::vector<std::vector<std::pair<VertexId, EdgeId>>> adj(n);
        for (EdgeId e : tree) {
            auto [a, b] = g.endpoints(e);
            adj[a].emplace_back(b, e);
            adj[b].emplace_back(a, e);
        }
        std::vector<VertexId> all(n);
        std::iota(all.begin(), all.end(), 0);
        SplitSearch search{g, balance, total / d, balance.epsilon * (total / d), rng, adj,
                           200L * n + 2000};
        std::vector<EdgeId> marks;
        if (search.split(std::move(all), d, marks)) {
            MarkedTreeState s = MarkedTreeState::create(g, tree, marks, balance);
            return s;
        }
    }
    throw InitFailureError("no balanced configuration found after " +
                           std::to_string(max_attempts) +
                           " spanning trees; epsilon may be infeasible");
}

}  // namespace mew
