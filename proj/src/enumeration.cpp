#include "mew/enumeration.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace mew {

int PartitionCatalog::index_of(const Partition& p) const {
    Partition c = canonicalized(p);
    auto [lo, hi] = fingerprint_index.equal_range(partition_fingerprint(c));
    for (auto it = lo; it != hi; ++it)
        if (partitions[it->second] == c) return it->second;
    return -1;
}

void PartitionCatalog::rebuild_index() {
    fingerprint_index.clear();
    for (std::size_t i = 0; i < partitions.size(); ++i)
        fingerprint_index.emplace(partition_fingerprint(partitions[i]), static_cast<int>(i));
}

namespace {

struct PartitionSearch {
    const DualGraph& g;
    int d;
    const BalanceSpec& balance;
    std::uint64_t work_limit;
    std::uint64_t work = 0;

    double lo = 0.0, hi = 0.0;  // per-part weight window
    std::vector<int> assignment;         // -1 = unassigned
    std::vector<double> weight_of;       // per vertex balance weight
    PartitionCatalog out;

    void tick() {
        if (++work > work_limit)
            throw WorkLimitError("partition enumeration exceeded " +
                                 std::to_string(work_limit) + " search nodes");
    }

    // can the unassigned remainder split into `parts_left` balanced parts?
    bool remainder_feasible(int parts_left) const {
        const int n = g.vertex_count();
        std::vector<char> seen(n, 0);
        int comp_lo = 0, comp_hi = 0;
        for (VertexId v = 0; v < n; ++v) {
            if (assignment[v] >= 0 || seen[v]) continue;
            double w = 0.0;
            std::vector<VertexId> stack{v};
            seen[v] = 1;
            while (!stack.empty()) {
                VertexId x = stack.back();
                stack.pop_back();
                w += weight_of[x];
                for (auto [y, e] : g.adjacency(x)) {
                    (void)e;
                    if (assignment[y] < 0 && !seen[y]) {
                        seen[y] = 1;
                        stack.push_back(y);
                    }
                }
            }
            int jmin, jmax;
            if (hi <= 0.0) {  // degenerate all-zero weights
                jmin = 1;
                jmax = parts_left;
            } else {
                jmin = std::max(1, static_cast<int>(std::ceil(w / hi - 1e-12)));
                jmax = lo > 0.0 ? static_cast<int>(std::floor(w / lo + 1e-12)) : parts_left;
            }
            if (jmin > jmax) return false;
            comp_lo += jmin;
            comp_hi += jmax;
        }
        return comp_lo <= parts_left && parts_left <= comp_hi;
    }

    void emit() {
        Partition p{assignment, d};
        out.partitions.push_back(std::move(p));  // canonical by construction
        out.exact_log_weights.push_back(0.0);
    }

    void assign_part(int k) {
        tick();
        if (k == d - 1) {
            // remainder must form the last part
            std::vector<VertexId> rest;
            double w = 0.0;
            for (VertexId v = 0; v < g.vertex_count(); ++v)
                if (assignment[v] < 0) {
                    rest.push_back(v);
                    w += weight_of[v];
                }
            if (rest.empty() || w < lo || w > hi) return;
            if (!subset_connected(g, rest)) return;
            for (VertexId v : rest) assignment[v] = k;
            emit();
            for (VertexId v : rest) assignment[v] = -1;
            return;
        }
        VertexId root = -1;
        for (VertexId v = 0; v < g.vertex_count(); ++v)
            if (assignment[v] < 0) {
                root = v;
                break;
            }
        if (root < 0) return;

        // connected subsets containing root, grown one frontier vertex at a
        // time; forbidden[] makes each subset unique
        std::vector<char> forbidden(g.vertex_count(), 0);
        std::vector<VertexId> subset{root};
        assignment[root] = k;
        std::vector<VertexId> frontier;
        for (auto [w, e] : g.adjacency(root)) {
            (void)e;
            if (assignment[w] < 0) frontier.push_back(w);
        }
        grow(k, subset, weight_of[root], frontier, forbidden);
        assignment[root] = -1;
    }

    void grow(int k, std::vector<VertexId>& subset, double subset_weight,
              std::vector<VertexId> frontier, std::vector<char>& forbidden) {
        tick();
        if (subset_weight >= lo && subset_weight <= hi && remainder_feasible(d - k - 1))
            assign_part(k + 1);

        // pick candidates in frontier order; after exploring with c included,
        // forbid c for the rest of this node
        std::vector<VertexId> locally_forbidden;
        while (!frontier.empty()) {
            VertexId c = frontier.back();
            frontier.pop_back();
            if (forbidden[c] || assignment[c] >= 0) continue;
            if (subset_weight + weight_of[c] <= hi + 1e-12 * (1.0 + hi)) {
                subset.push_back(c);
                assignment[c] = k;
                std::vector<VertexId> next_frontier = frontier;
                for (auto [w, e] : g.adjacency(c)) {
                    (void)e;
                    if (assignment[w] < 0 && !forbidden[w]) next_frontier.push_back(w);
                }
                grow(k, subset, subset_weight + weight_of[c], std::move(next_frontier),
                     forbidden);
                assignment[c] = -1;
                subset.pop_back();
            }
            forbidden[c] = 1;
            locally_forbidden.push_back(c);
        }
        for (VertexId c : locally_forbidden) forbidden[c] = 0;
    }
};

}  // namespace

PartitionCatalog enumerate_partitions(const DualGraph& g, int d, const BalanceSpec& balance,
                                      std::uint64_t work_limit) {
    if (d < 1 || d > g.vertex_count()) throw ConfigError("invalid part count");
    PartitionSearch search{g, d, balance, work_limit};
    const double total = total_balance_weight(g, balance);
    search.lo = (total / d) * (1.0 - balance.epsilon);
    search.hi = (total / d) * (1.0 + balance.epsilon);
    search.assignment.assign(g.vertex_count(), -1);
    search.weight_of.resize(g.vertex_count());
    for (VertexId v = 0; v < g.vertex_count(); ++v)
        search.weight_of[v] = balance_weight(g, balance, v);

    if (d == 1) {
        search.emit();
    } else {
        search.assign_part(0);
    }
    search.out.rebuild_index();
    return search.out;
}

namespace {

// union-find with rollback for the spanning-tree recursion
struct Dsu {
    std::vector<int> parent, rank_;
    std::vector<std::pair<int, int>> log;  // (child, old rank of new root)

    explicit Dsu(int n) : parent(n), rank_(n, 0) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int x) const {
        while (parent[x] != x) x = parent[x];
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        log.emplace_back(b, rank_[a]);
        parent[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
        return true;
    }
    void rollback(std::size_t mark) {
        while (log.size() > mark) {
            auto [child, old_rank] = log.back();
            log.pop_back();
            rank_[parent[child]] = old_rank;
            parent[child] = child;
        }
    }
};

struct TreeSearch {
    const DualGraph& g;
    std::uint64_t work_limit;
    std::uint64_t work = 0;
    std::vector<EdgeId> chosen;
    std::vector<std::vector<EdgeId>> trees;

    void tick() {
        if (++work > work_limit)
            throw WorkLimitError("spanning tree enumeration exceeded " +
                                 std::to_string(work_limit) + " search nodes");
    }

    void recurse(EdgeId next, Dsu& dsu) {
        tick();
        const int n = g.vertex_count();
        const int m = g.edge_count();
        if (static_cast<int>(chosen.size()) == n - 1) {
            trees.push_back(chosen);
            return;
        }
        if (next >= m) return;
        if (m - next < n - 1 - static_cast<int>(chosen.size())) return;  // not enough left

        auto [a, b] = g.endpoints(next);
        if (dsu.find(a) != dsu.find(b)) {
            std::size_t mark = dsu.log.size();
            dsu.unite(a, b);
            chosen.push_back(next);
            recurse(next + 1, dsu);
            chosen.pop_back();
            dsu.rollback(mark);
        }
        recurse(next + 1, dsu);
    }
};

}  // namespace

std::vector<LiftedState> enumerate_lifted_states(const DualGraph& g, int d,
                                                 const BalanceSpec& balance,
                                                 std::uint64_t work_limit) {
    if (d < 1 || d > g.vertex_count()) throw ConfigError("invalid part count");
    TreeSearch ts{g, work_limit};
    Dsu dsu(g.vertex_count());
    ts.recurse(0, dsu);

    const double total = total_balance_weight(g, balance);
    std::vector<LiftedState> out;
    for (const auto& tree : ts.trees) {
        // all (d-1)-subsets of tree edges whose removal balances the forest
        const int te = static_cast<int>(tree.size());
        std::vector<int> pick(d - 1);
        std::vector<char> removed(te, 0);

        auto balanced_with_marks = [&]() {
            // component weights of the tree minus removed edges
            std::vector<std::vector<VertexId>> adj(g.vertex_count());
            for (int i = 0; i < te; ++i) {
                if (removed[i]) continue;
                auto [a, b] = g.endpoints(tree[i]);
                adj[a].push_back(b);
                adj[b].push_back(a);
            }
            std::vector<char> seen(g.vertex_count(), 0);
            std::vector<double> weights;
            for (VertexId v = 0; v < g.vertex_count(); ++v) {
                if (seen[v]) continue;
                double w = 0.0;
                std::vector<VertexId> stack{v};
                seen[v] = 1;
                while (!stack.empty()) {
                    VertexId x = stack.back();
                    stack.pop_back();
                    w += balance_weight(g, balance, x);
                    for (VertexId y : adj[x])
                        if (!seen[y]) {
                            seen[y] = 1;
                            stack.push_back(y);
                        }
                }
                weights.push_back(w);
            }
            return weights_balanced(weights, total, d, balance.epsilon);
        };

        std::function<void(int, int)> choose = [&](int from, int need) {
            ts.tick();
            if (need == 0) {
                if (balanced_with_marks()) {
                    LiftedState st;
                    st.tree = tree;
                    std::sort(st.tree.begin(), st.tree.end());
                    for (int i = 0; i < te; ++i)
                        if (removed[i]) st.marked.push_back(tree[i]);
                    std::sort(st.marked.begin(), st.marked.end());
                    out.push_back(std::move(st));
                }
                return;
            }
            for (int i = from; i <= te - need; ++i) {
                removed[i] = 1;
                choose(i + 1, need - 1);
                removed[i] = 0;
            }
        };
        choose(0, d - 1);
    }
    return out;
}

std::vector<double> exact_target_distribution(PartitionCatalog& catalog, const DualGraph& g,
                                              const EnergyModel& model) {
    const std::size_t n = catalog.partitions.size();
    std::vector<double> logw(n);
    DegeneracyCache cache;
    for (std::size_t i = 0; i < n; ++i) {
        if (model.spec().spanning_tree_form) {
            // per-state mass tau^(1-gamma) times tau states: pi(xi) ~ tau^(2-gamma)
            logw[i] = (2.0 - model.spec().gamma) *
                      log_degeneracy(g, catalog.partitions[i], &cache);
        } else {
            double j = model.energy(model.tallies(catalog.partitions[i]));
            logw[i] = j;
            if (model.spec().gamma != 1.0) {
                // residual degeneracy when the correction is partial:
                // p(x) ~ exp(J)/tau^gamma summed over tau states -> exp(J) tau^(1-gamma)
                logw[i] += (1.0 - model.spec().gamma) *
                           log_degeneracy(g, catalog.partitions[i], &cache);
            }
        }
    }
    catalog.exact_log_weights = logw;
    double max_lw = *std::max_element(logw.begin(), logw.end());
    double sum = 0.0;
    for (double lw : logw) sum += std::exp(lw - max_lw);
    const double log_z = max_lw + std::log(sum);
    std::vector<double> probs(n);
    for (std::size_t i = 0; i < n; ++i) probs[i] = std::exp(logw[i] - log_z);
    return probs;
}

Partition recom2_baseline_sample(const DualGraph& g, const BalanceSpec& balance, RngStream& rng,
                                 int max_attempts) {
    const int n = g.vertex_count();
    const double total = total_balance_weight(g, balance);
    const double lo = (total / 2) * (1.0 - balance.epsilon);
    const double hi = (total / 2) * (1.0 + balance.epsilon);

    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        std::vector<EdgeId> tree = sample_spanning_tree(g, rng);
        std::vector<std::vector<std::pair<VertexId, EdgeId>>> adj(n);
        for (EdgeId e : tree) {
            auto [a, b] = g.endpoints(e);
            adj[a].emplace_back(b, e);
            adj[b].emplace_back(a, e);
        }
        // root at 0, subtree weights
        std::vector<VertexId> order, parent(n, -1);
        std::vector<char> seen(n, 0);
        std::vector<VertexId> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            VertexId v = stack.back();
            stack.pop_back();
            order.push_back(v);
            for (auto [w, e] : adj[v]) {
                (void)e;
                if (!seen[w]) {
                    seen[w] = 1;
                    parent[w] = v;
                    stack.push_back(w);
                }
            }
        }
        std::vector<double> subtree(n, 0.0);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            subtree[*it] += balance_weight(g, balance, *it);
            if (parent[*it] >= 0) subtree[parent[*it]] += subtree[*it];
        }
        std::vector<VertexId> balanced_below;
        for (VertexId v = 1; v < n; ++v) {
            if (parent[v] < 0) continue;
            double wa = subtree[v], wb = total - wa;
            if (wa >= lo && wa <= hi && wb >= lo && wb <= hi) balanced_below.push_back(v);
        }
        if (balanced_below.empty()) continue;
        VertexId below = balanced_below[rng.uniform_index(balanced_below.size())];

        Partition p;
        p.d = 2;
        p.assignment.assign(n, 0);
        std::vector<VertexId> dfs{below};
        p.assignment[below] = 1;
        while (!dfs.empty()) {
            VertexId v = dfs.back();
            dfs.pop_back();
            for (auto [w, e] : adj[v]) {
                (void)e;
                if (parent[w] == v && p.assignment[w] == 0) {
                    p.assignment[w] = 1;
                    dfs.push_back(w);
                }
            }
        }
        return canonicalized(p);
    }
    throw InitFailureError("recom2 baseline: no balanced edge found in " +
                           std::to_string(max_attempts) + " trees");
}

}  // namespace mew
