#include "mew/walk.hpp"

#include <algorithm>
#include <queue>

namespace mew {

namespace {

bool marked_after(const MarkedTreeState& s, const Proposal& p, EdgeId e) {
    if (p.has_marked) {
        if (e == p.m_new) return true;
        if (e == p.m_old) return false;
    }
    return s.is_marked(e);
}

bool tree_changed(const Proposal& p) {
    return p.has_cycle && p.e_plus >= 0 && p.e_minus >= 0 && p.e_plus != p.e_minus;
}

// neighbors of u in T' without materializing T'; appended chord last
std::vector<std::pair<VertexId, EdgeId>> tprime_neighbors(const MarkedTreeState& s,
                                                          VertexId u, EdgeId e_plus,
                                                          EdgeId e_minus) {
    std::vector<std::pair<VertexId, EdgeId>> out;
    const bool swapped = e_plus >= 0 && e_plus != e_minus;
    out.reserve(s.tree_adjacency(u).size() + 1);
    for (auto [w, e] : s.tree_adjacency(u)) {
        if (swapped && e == e_minus) continue;
        out.emplace_back(w, e);
    }
    if (swapped) {
        auto [a, b] = s.graph().endpoints(e_plus);
        if (u == a) out.emplace_back(b, e_plus);
        else if (u == b) out.emplace_back(a, e_plus);
    }
    return out;
}

int tprime_degree(const MarkedTreeState& s, VertexId u, EdgeId e_plus, EdgeId e_minus) {
    int deg = s.tree_degree(u);
    if (e_plus >= 0 && e_plus != e_minus) {
        auto [pa, pb] = s.graph().endpoints(e_plus);
        if (u == pa || u == pb) ++deg;
        auto [ma, mb] = s.graph().endpoints(e_minus);
        if (u == ma || u == mb) --deg;
    }
    return deg;
}

void fill_marked_step(const MarkedTreeState& s, RngStream& rng, Proposal& p) {
    const auto& marked = s.marked_edges();
    if (marked.empty()) throw ConfigError("marked edge step undefined for d = 1");
    p.has_marked = true;
    p.m_old = marked[rng.uniform_index(marked.size())];
    auto [a, b] = s.graph().endpoints(p.m_old);
    p.endpoint_u = rng.uniform_index(2) == 0 ? a : b;

    const EdgeId ep = p.has_cycle ? p.e_plus : -1;
    const EdgeId em = p.has_cycle ? p.e_minus : -1;
    auto nbrs = tprime_neighbors(s, p.endpoint_u, ep, em);
    auto [w, e] = nbrs[rng.uniform_index(nbrs.size())];
    p.neighbor_v = w;
    p.m_new = e;

    p.deg_t_u = s.tree_degree(p.endpoint_u);
    p.deg_t_v = s.tree_degree(p.neighbor_v);
    p.deg_tp_u = tprime_degree(s, p.endpoint_u, ep, em);
    p.deg_tp_v = tprime_degree(s, p.neighbor_v, ep, em);

    p.collision = s.is_marked(p.m_new) && p.m_new != p.m_old;
}

void fill_cycle_sizes(const MarkedTreeState& s, Proposal& p) {
    p.cycle_minus_m = 0;
    p.cycle_minus_mprime = 0;
    for (EdgeId e : p.cycle) {
        if (!s.is_marked(e)) ++p.cycle_minus_m;
        if (!marked_after(s, p, e)) ++p.cycle_minus_mprime;
    }
}

}  // namespace

std::vector<EdgeId> fundamental_cycle(const MarkedTreeState& s, EdgeId e_plus) {
    if (s.in_tree(e_plus)) throw MewError("fundamental_cycle: edge already in the tree");
    const DualGraph& g = s.graph();
    auto [from, to] = g.endpoints(e_plus);

    // BFS tree path from -> to
    const int n = g.vertex_count();
    std::vector<EdgeId> via_edge(n, -1);
    std::vector<VertexId> via_vertex(n, -1);
    std::vector<char> seen(n, 0);
    std::queue<VertexId> q;
    q.push(from);
    seen[from] = 1;
    while (!q.empty()) {
        VertexId v = q.front();
        q.pop();
        if (v == to) break;
        for (auto [w, e] : s.tree_adjacency(v)) {
            if (!seen[w]) {
                seen[w] = 1;
                via_edge[w] = e;
                via_vertex[w] = v;
                q.push(w);
            }
        }
    }
    if (!seen[to]) throw MewError("fundamental_cycle: endpoints not tree-connected");

    std::vector<EdgeId> cycle;
    for (VertexId v = to; v != from; v = via_vertex[v]) cycle.push_back(via_edge[v]);
    std::reverse(cycle.begin(), cycle.end());
    cycle.push_back(e_plus);
    return cycle;
}

Proposal propose(const MarkedTreeState& s, RngStream& rng) {
    const auto& nontree = s.nontree_edges();
    if (nontree.empty())
        throw ConfigError("the graph is its own spanning tree; the cycle step is undefined");

    Proposal p;
    p.has_cycle = true;
    p.e_plus = nontree[rng.uniform_index(nontree.size())];
    p.cycle = fundamental_cycle(s, p.e_plus);

    // e_minus uniform over C \ M; e_minus == e_plus is the lazy tree move
    std::vector<EdgeId> removable;
    removable.reserve(p.cycle.size());
    for (EdgeId e : p.cycle)
        if (!s.is_marked(e)) removable.push_back(e);
    p.e_minus = removable[rng.uniform_index(removable.size())];

    fill_marked_step(s, rng, p);
    fill_cycle_sizes(s, p);
    return p;
}

Proposal propose_single_step(const MarkedTreeState& s, RngStream& rng, double p_cycle) {
    if (p_cycle < 0.0 || p_cycle > 1.0) throw ConfigError("p_cycle must lie in [0, 1]");
    Proposal p;
    if (rng.uniform01() < p_cycle) {
        const auto& nontree = s.nontree_edges();
        if (nontree.empty())
            throw ConfigError("the graph is its own spanning tree; the cycle step is undefined");
        p.has_cycle = true;
        p.e_plus = nontree[rng.uniform_index(nontree.size())];
        p.cycle = fundamental_cycle(s, p.e_plus);
        std::vector<EdgeId> removable;
        for (EdgeId e : p.cycle)
            if (!s.is_marked(e)) removable.push_back(e);
        p.e_minus = removable[rng.uniform_index(removable.size())];
        fill_cycle_sizes(s, p);
    } else {
        fill_marked_step(s, rng, p);
    }
    return p;
}

RatioParts transition_ratio_parts(const Proposal& p) {
    RatioParts r;
    if (p.collision) {
        r.indicator = 0.0;
        return r;
    }
    if (!p.has_cycle || !p.has_marked) return r;  // single-step moves are symmetric

    if (p.m_new == p.e_plus) {
        r.indicator = 0.0;
        return r;
    }
    r.tree_factor = static_cast<double>(p.cycle_minus_m) / static_cast<double>(p.cycle_minus_mprime);
    r.marked_factor = static_cast<double>(p.deg_tp_u) / static_cast<double>(p.deg_t_u);
    if (p.m_new == p.m_old) {
        r.marked_factor *= static_cast<double>(p.deg_t_u + p.deg_t_v) /
                           static_cast<double>(p.deg_tp_u + p.deg_tp_v);
        r.marked_factor *= static_cast<double>(p.deg_tp_v) / static_cast<double>(p.deg_t_v);
    }
    return r;
}

double transition_ratio(const Proposal& p) {
    RatioParts r = transition_ratio_parts(p);
    return r.indicator * r.tree_factor * r.marked_factor;
}

StateDelta build_delta(const MarkedTreeState& s, const Proposal& p) {
    if (p.collision) throw MewError("build_delta: collision proposal");
    const DualGraph& g = s.graph();

    StateDelta d;
    if (tree_changed(p)) {
        d.e_plus = p.e_plus;
        d.e_minus = p.e_minus;
    }
    const bool marks_changed = p.has_marked && p.m_old != p.m_new;
    if (marks_changed) {
        d.m_old = p.m_old;
        d.m_new = p.m_new;
    }

    // parts touched by the move
    auto add_parts_of = [&](EdgeId e) {
        auto [a, b] = g.endpoints(e);
        d.dirty_labels.push_back(s.part_of()[a]);
        d.dirty_labels.push_back(s.part_of()[b]);
    };
    if (tree_changed(p)) {
        add_parts_of(p.e_plus);
        add_parts_of(p.e_minus);
    }
    if (marks_changed) {
        add_parts_of(p.m_old);
        add_parts_of(p.m_new);
    }
    std::sort(d.dirty_labels.begin(), d.dirty_labels.end());
    d.dirty_labels.erase(std::unique(d.dirty_labels.begin(), d.dirty_labels.end()),
                         d.dirty_labels.end());
    if (d.dirty_labels.empty()) return d;  // identity move

    for (int lbl : d.dirty_labels) {
        const auto& members = s.part_members(lbl);
        d.region.insert(d.region.end(), members.begin(), members.end());
    }
    std::sort(d.region.begin(), d.region.end());

    // components of the new forest restricted to the region; the region is a
    // union of whole components, so traversal never leaves it
    const int n = g.vertex_count();
    std::vector<int> new_label(n, -1);
    const int attrs = s.tracked_attributes();
    d.new_attr_sums.assign(attrs, {});
    std::size_t comp = 0;
    std::vector<VertexId> stack;
    for (VertexId root : d.region) {
        if (new_label[root] >= 0) continue;
        if (comp >= d.dirty_labels.size())
            throw MewError("walk delta: more components than touched parts");
        const int lbl = d.dirty_labels[comp];
        double weight = 0.0;
        int size = 0;
        PartKey key;
        std::vector<VertexId> members;
        std::vector<double> attr_acc(attrs, 0.0);

        stack.push_back(root);
        new_label[root] = lbl;
        while (!stack.empty()) {
            VertexId v = stack.back();
            stack.pop_back();
            members.push_back(v);
            weight += balance_weight(g, s.balance(), v);
            ++size;
            key.a += vertex_hash1(v);
            key.b ^= vertex_hash2(v);
            for (int a = 0; a < attrs; ++a) attr_acc[a] += s.attr_column(a)[v];

            auto visit = [&](VertexId w) {
                if (new_label[w] < 0) {
                    new_label[w] = lbl;
                    stack.push_back(w);
                }
            };
            for (auto [w, e] : s.tree_adjacency(v)) {
                if (tree_changed(p) && e == p.e_minus) continue;
                if (marked_after(s, p, e)) continue;
                visit(w);
            }
            if (tree_changed(p)) {
                auto [a, b] = g.endpoints(p.e_plus);
                if ((v == a || v == b) && !marked_after(s, p, p.e_plus)) visit(v == a ? b : a);
            }
        }
        std::sort(members.begin(), members.end());
        d.new_members.push_back(std::move(members));
        d.new_weight.push_back(weight);
        d.new_size.push_back(size);
        d.new_min_vertex.push_back(root);
        d.new_key.push_back(key);
        for (int a = 0; a < attrs; ++a) d.new_attr_sums[a].push_back(attr_acc[a]);
        ++comp;
    }
    if (comp != d.dirty_labels.size())
        throw MewError("walk delta: fewer components than touched parts");

    // relabel parallel to dirty order
    d.region_new_label.resize(d.region.size());
    for (std::size_t i = 0; i < d.region.size(); ++i)
        d.region_new_label[i] = new_label[d.region[i]];

    // cut edge events: every graph edge incident to the region, once
    for (VertexId v : d.region) {
        for (auto [w, e] : g.adjacency(v)) {
            int wn = new_label[w];
            if (wn < 0) {
                int other = s.part_of()[w];
                d.edge_relabels.push_back({e, s.part_of()[v], other, new_label[v], other});
            } else if (v < w) {
                d.edge_relabels.push_back({e, s.part_of()[v], s.part_of()[w], new_label[v], wn});
            }
        }
    }
    for (const auto& ev : d.edge_relabels)
        d.cut_delta += (ev.new_a != ev.new_b) - (ev.old_a != ev.old_b);
    return d;
}

MarkedTreeState applied(const MarkedTreeState& s, const Proposal& p) {
    if (p.collision) throw MewError("apply: marked-edge collision");
    StateDelta d = build_delta(s, p);
    MarkedTreeState out = s;
    out.commit(d);
    std::vector<double> w = out.part_weights();
    if (!weights_balanced(w, total_balance_weight(s.graph(), s.balance()), s.part_count(),
                          s.balance().epsilon))
        throw MewError("apply: move breaks the balance invariant");
    return out;
}

Proposal reverse_proposal(const MarkedTreeState& before, const MarkedTreeState& after,
                          const Proposal& p) {
    Proposal r;
    r.has_cycle = p.has_cycle;
    r.has_marked = p.has_marked;
    if (p.has_cycle) {
        r.e_plus = p.e_minus;
        r.e_minus = p.e_plus;
        r.cycle = fundamental_cycle(after, r.e_plus);
        r.cycle_minus_m = p.cycle_minus_mprime;
        r.cycle_minus_mprime = p.cycle_minus_m;
    }
    if (p.has_marked) {
        r.m_old = p.m_new;
        r.m_new = p.m_old;
        r.endpoint_u = p.endpoint_u;
        auto [a, b] = before.graph().endpoints(p.m_old);
        r.neighbor_v = (r.endpoint_u == a) ? b : a;
        r.deg_t_u = after.tree_degree(r.endpoint_u);
        r.deg_tp_u = before.tree_degree(r.endpoint_u);
        r.deg_t_v = after.tree_degree(r.neighbor_v);
        r.deg_tp_v = before.tree_degree(r.neighbor_v);
        r.collision = after.is_marked(r.m_new) && r.m_new != r.m_old;
    }
    return r;
}

}  // namespace mew
