#include "mew/partition.hpp"

#include <algorithm>

namespace mew {

Partition canonicalized(const Partition& p) {
    Partition out;
    out.d = p.d;
    out.assignment.resize(p.assignment.size());
    std::vector<int> relabel(p.d, -1);
    int next = 0;
    for (std::size_t v = 0; v < p.assignment.size(); ++v) {
        int& label = relabel[p.assignment[v]];
        if (label < 0) label = next++;
        out.assignment[v] = label;
    }
    return out;
}

void validate_partition(const DualGraph& g, const Partition& p) {
    const int n = g.vertex_count();
    if (static_cast<int>(p.assignment.size()) != n)
        throw MewError("partition assignment length does not match vertex count");
    if (p.d <= 0) throw MewError("partition must have at least one part");
    std::vector<std::vector<VertexId>> parts(p.d);
    for (VertexId v = 0; v < n; ++v) {
        int label = p.assignment[v];
        if (label < 0 || label >= p.d) throw MewError("partition label out of range");
        parts[label].push_back(v);
    }
    for (int i = 0; i < p.d; ++i) {
        if (parts[i].empty()) throw MewError("partition part " + std::to_string(i) + " is empty");
        // connectivity within the part
        std::vector<char> in_part(n, 0), seen(n, 0);
        for (VertexId v : parts[i]) in_part[v] = 1;
        std::vector<VertexId> stack{parts[i][0]};
        seen[parts[i][0]] = 1;
        std::size_t reached = 1;
        while (!stack.empty()) {
            VertexId v = stack.back();
            stack.pop_back();
            for (auto [w, e] : g.adjacency(v)) {
                (void)e;
                if (in_part[w] && !seen[w]) {
                    seen[w] = 1;
                    ++reached;
                    stack.push_back(w);
                }
            }
        }
        if (reached != parts[i].size())
            throw MewError("partition part " + std::to_string(i) + " is not connected");
    }
}

std::uint64_t partition_fingerprint(const Partition& p) {
    Partition c = canonicalized(p);
    std::uint64_t h = 0x243F6A8885A308D3ull ^ static_cast<std::uint64_t>(c.d);
    for (std::size_t v = 0; v < c.assignment.size(); ++v) {
        h = splitmix64(h ^ (static_cast<std::uint64_t>(c.assignment[v]) +
                            (static_cast<std::uint64_t>(v) << 32)));
    }
    return h;
}

double total_balance_weight(const DualGraph& g, const BalanceSpec& spec) {
    if (spec.mode == BalanceMode::population) return g.total_population();
    return static_cast<double>(g.vertex_count());
}

std::vector<double> part_weights(const DualGraph& g, const Partition& p, const BalanceSpec& spec) {
    std::vector<double> w(p.d, 0.0);
    for (VertexId v = 0; v < g.vertex_count(); ++v)
        w[p.assignment[v]] += balance_weight(g, spec, v);
    return w;
}

bool weights_balanced(const std::vector<double>& weights, double total, int d, double epsilon) {
    const double ideal = total / d;
    const double lo = ideal * (1.0 - epsilon);
    const double hi = ideal * (1.0 + epsilon);
    for (double w : weights)
        if (w < lo || w > hi) return false;
    return true;
}

bool is_balanced(const Partition& p, const DualGraph& g, const BalanceSpec& spec) {
    return weights_balanced(part_weights(g, p, spec), total_balance_weight(g, spec), p.d,
                            spec.epsilon);
}

Multigraph quotient_multigraph(const DualGraph& g, const Partition& p) {
    Multigraph q;
    q.vertex_count = p.d;
    std::vector<double> mult(static_cast<std::size_t>(p.d) * p.d, 0.0);
    for (const auto& [a, b] : g.edges()) {
        int pa = p.assignment[a], pb = p.assignment[b];
        if (pa == pb) continue;
        if (pa > pb) std::swap(pa, pb);
        mult[static_cast<std::size_t>(pa) * p.d + pb] += 1.0;
    }
    for (int i = 0; i < p.d; ++i)
        for (int j = i + 1; j < p.d; ++j) {
            double m = mult[static_cast<std::size_t>(i) * p.d + j];
            if (m > 0.0) q.edges.emplace_back(i, j, m);
        }
    return q;
}

}  // namespace mew
