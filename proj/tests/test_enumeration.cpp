#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "oracles.hpp"

using namespace mew;

namespace {

DualGraph cycle_graph(int n) {
    std::vector<std::pair<VertexId, VertexId>> edges;
    for (int v = 0; v < n; ++v) edges.emplace_back(v, (v + 1) % n);
    return DualGraph::from_edges(n, std::move(edges), std::vector<double>(n, 1.0));
}

DualGraph path_graph(int n) {
    std::vector<std::pair<VertexId, VertexId>> edges;
    for (int v = 0; v + 1 < n; ++v) edges.emplace_back(v, v + 1);
    return DualGraph::from_edges(n, std::move(edges), std::vector<double>(n, 1.0));
}

DualGraph grid_graph(int rows, int cols) {
    auto id = [&](int r, int c) { return r * cols + c; };
    std::vector<std::pair<VertexId, VertexId>> edges;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            if (c + 1 < cols) edges.emplace_back(id(r, c), id(r, c + 1));
            if (r + 1 < rows) edges.emplace_back(id(r, c), id(r + 1, c));
        }
    return DualGraph::from_edges(rows * cols, std::move(edges),
                                 std::vector<double>(rows * cols, 1.0));
}

std::set<std::vector<int>> as_set(const std::vector<Partition>& ps) {
    std::set<std::vector<int>> out;
    for (const auto& p : ps) out.insert(canonicalized(p).assignment);
    return out;
}

BalanceSpec pop0() { return {BalanceMode::population, 0.0}; }

}  // namespace

TEST_CASE("C4 has exactly two balanced 2-partitions") {
    auto catalog = enumerate_partitions(cycle_graph(4), 2, pop0());
    CHECK(catalog.partitions.size() == 2);
    std::set<std::vector<int>> expected{{0, 0, 1, 1}, {0, 1, 1, 0}};
    CHECK(as_set(catalog.partitions) == expected);
    CHECK(catalog.index_of(Partition{{1, 1, 0, 0}, 2}) >= 0);  // label-permutation lookup
    CHECK(catalog.index_of(Partition{{0, 1, 0, 1}, 2}) == -1);
}

TEST_CASE("P4 has exactly the middle split") {
    auto catalog = enumerate_partitions(path_graph(4), 2, pop0());
    REQUIRE(catalog.partitions.size() == 1);
    CHECK(catalog.partitions[0].assignment == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("recursive growth agrees with the filter-all-labelings oracle") {
    RngStream rng(1234);
    // the 4x4 grid the acceptance fixtures use
    {
        DualGraph grid = grid_graph(4, 4);
        auto catalog = enumerate_partitions(grid, 2, pop0());
        auto brute = oracle::filter_all_partitions(grid, 2, pop0());
        CHECK(catalog.partitions.size() == brute.size());
        CHECK(as_set(catalog.partitions) == as_set(brute));
    }
    // random small graphs, d in {2, 3}, mixed tolerances
    for (int trial = 0; trial < 10; ++trial) {
        int n = 5 + static_cast<int>(rng.uniform_index(4));
        DualGraph g = oracle::random_connected_graph(n, 2 + rng.uniform_index(4), rng);
        int d = 2 + static_cast<int>(rng.uniform_index(2));
        BalanceSpec balance{BalanceMode::node, trial % 2 == 0 ? 0.34 : 0.6};
        auto catalog = enumerate_partitions(g, d, balance);
        auto brute = oracle::filter_all_partitions(g, d, balance);
        CHECK(as_set(catalog.partitions) == as_set(brute));
    }
}

TEST_CASE("catalog order is deterministic and duplicate-free") {
    DualGraph grid = grid_graph(3, 3);
    BalanceSpec balance{BalanceMode::node, 0.34};
    auto a = enumerate_partitions(grid, 3, balance);
    auto b = enumerate_partitions(grid, 3, balance);
    REQUIRE(a.partitions.size() == b.partitions.size());
    for (std::size_t i = 0; i < a.partitions.size(); ++i)
        CHECK(a.partitions[i] == b.partitions[i]);
    CHECK(as_set(a.partitions).size() == a.partitions.size());
}

TEST_CASE("lifted-state enumeration on C4: one balanced mark per path tree") {
    auto lifted = enumerate_lifted_states(cycle_graph(4), 2, pop0());
    CHECK(lifted.size() == 4);  // 4 trees, each a 4-path whose middle edge balances
    std::set<std::string> keys;
    for (const auto& st : lifted) {
        CHECK(st.tree.size() == 3);
        CHECK(st.marked.size() == 1);
        keys.insert(oracle::lifted_key(st.tree, st.marked));
    }
    CHECK(keys.size() == 4);
}

TEST_CASE("lifted-state enumeration equals the degeneracy totals on the triangle") {
    DualGraph t = cycle_graph(3);
    BalanceSpec balance{BalanceMode::node, 0.9};
    auto lifted = enumerate_lifted_states(t, 2, balance);
    auto catalog = enumerate_partitions(t, 2, balance);
    double total = 0.0;
    for (const auto& p : catalog.partitions) total += std::exp(log_degeneracy(t, p));
    CHECK(std::llround(total) == static_cast<long>(lifted.size()));
    CHECK(lifted.size() == 6);
}

TEST_CASE("single-tree graph: lifted states are balanced edge removals") {
    DualGraph p5 = path_graph(5);
    BalanceSpec balance{BalanceMode::node, 0.65};  // ideal 2.5, window [0.875, 4.125]
    auto lifted = enumerate_lifted_states(p5, 2, balance);
    // splits 1|4, 2|3, 3|2, 4|1 all balanced
    CHECK(lifted.size() == 4);
    for (const auto& st : lifted) CHECK(st.tree.size() == 4);
}

TEST_CASE("work limit raises a distinct error") {
    DualGraph grid = grid_graph(4, 4);
    CHECK_THROWS_AS(enumerate_partitions(grid, 2, pop0(), 10), WorkLimitError);
    CHECK_THROWS_AS(enumerate_lifted_states(grid, 2, pop0(), 10), WorkLimitError);
}

TEST_CASE("exact_target_distribution: uniform, spanning-tree, Gaussian forms") {
    DualGraph grid = grid_graph(3, 3);
    BalanceSpec balance{BalanceMode::node, 0.34};
    auto catalog = enumerate_partitions(grid, 3, balance);
    REQUIRE(catalog.partitions.size() > 1);

    EnergySpec j0;
    j0.terms.push_back({ObservableId::constant_zero, 0.0, 0.0, 0, 1.0});
    EnergyModel m0(grid, j0, 3, 0);
    auto probs0 = exact_target_distribution(catalog, grid, m0);
    for (double p : probs0)
        CHECK(p == doctest::Approx(1.0 / catalog.partitions.size()).epsilon(1e-12));

    EnergySpec js;
    js.spanning_tree_form = true;
    EnergyModel ms(grid, js, 3, 0);
    auto probs_st = exact_target_distribution(catalog, grid, ms);
    // pi proportional to tau
    std::vector<double> tau(catalog.partitions.size());
    double total = 0.0;
    for (std::size_t i = 0; i < tau.size(); ++i) {
        tau[i] = std::exp(log_degeneracy(grid, catalog.partitions[i]));
        total += tau[i];
    }
    for (std::size_t i = 0; i < tau.size(); ++i)
        CHECK(probs_st[i] == doctest::Approx(tau[i] / total).epsilon(1e-9));

    EnergySpec jc;
    jc.terms.push_back({ObservableId::cut_edges, 0.5, 6.0, 0, 1.0});
    EnergyModel mc(grid, jc, 3, 0);
    auto probs_c = exact_target_distribution(catalog, grid, mc);
    double z = 0.0;
    std::vector<double> w(catalog.partitions.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        int c = cut_edges(grid, catalog.partitions[i]);
        w[i] = std::exp(-0.5 * (c - 6.0) * (c - 6.0));
        z += w[i];
    }
    for (std::size_t i = 0; i < w.size(); ++i)
        CHECK(probs_c[i] == doctest::Approx(w[i] / z).epsilon(1e-9));
}

TEST_CASE("recom2 baseline on C4: both splits near 1/2") {
    DualGraph c4 = cycle_graph(4);
    RngStream rng(2718);
    std::map<std::vector<int>, int> freq;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i)
        freq[recom2_baseline_sample(c4, pop0(), rng).assignment]++;
    REQUIRE(freq.size() == 2);
    for (const auto& [key, count] : freq)
        CHECK(static_cast<double>(count) / draws == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("recom2 baseline on P4: always the middle split") {
    DualGraph p4 = path_graph(4);
    RngStream rng(3);
    for (int i = 0; i < 200; ++i) {
        Partition p = recom2_baseline_sample(p4, pop0(), rng);
        CHECK(p.assignment == std::vector<int>{0, 0, 1, 1});
    }
}

TEST_CASE("recom2 baseline on a tree: uniform over balanced edges") {
    DualGraph p5 = path_graph(5);
    BalanceSpec balance{BalanceMode::node, 0.65};
    RngStream rng(99);
    std::map<std::vector<int>, int> freq;
    const int draws = 20000;
    for (int i = 0; i < draws; ++i)
        freq[recom2_baseline_sample(p5, balance, rng).assignment]++;
    REQUIRE(freq.size() == 4);
    for (const auto& [key, count] : freq)
        CHECK(static_cast<double>(count) / draws == doctest::Approx(0.25).epsilon(0.08));
}

TEST_CASE("recom2 baseline matches the exact spanning-tree law on the 4x4 grid") {
    // validates the sampler against the catalog before any acceptance use;
    // the per-tree multiplicity caveat would show up here as a TV gap
    DualGraph grid = grid_graph(4, 4);
    auto catalog = enumerate_partitions(grid, 2, pop0());
    EnergySpec js;
    js.spanning_tree_form = true;
    EnergyModel ms(grid, js, 2, 0);
    auto probs = exact_target_distribution(catalog, grid, ms);

    RngStream rng(808);
    std::vector<long> counts(catalog.partitions.size(), 0);
    const int draws = 60000;
    for (int i = 0; i < draws; ++i) {
        int idx = catalog.index_of(recom2_baseline_sample(grid, pop0(), rng));
        REQUIRE(idx >= 0);
        ++counts[idx];
    }
    double tv = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i)
        tv += std::abs(static_cast<double>(counts[i]) / draws - probs[i]);
    tv *= 0.5;
    CHECK(tv < 0.05);
}
