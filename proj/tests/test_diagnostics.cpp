#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mew/diagnostics.hpp"
#include "oracles.hpp"

using namespace mew;

namespace {

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

}  // namespace

TEST_CASE("ks_1d hand values") {
    std::vector<double> a{1, 2, 3}, same{1, 2, 3};
    CHECK(ks_1d(a, same) == 0.0);
    std::vector<double> zeros{0, 0}, ones{1, 1};
    CHECK(ks_1d(zeros, ones) == 1.0);
    std::vector<double> b{1, 2, 4};
    CHECK(ks_1d(a, b) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK_THROWS_AS(ks_1d({}, a), MewError);
}

TEST_CASE("ks_1d symmetry and self-distance zero") {
    RngStream rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a, b;
        for (int i = 0; i < 40; ++i) a.push_back(std::floor(rng.uniform01() * 8));
        for (int i = 0; i < 25; ++i) b.push_back(std::floor(rng.uniform01() * 8));
        CHECK(ks_1d(a, b) == ks_1d(b, a));
        CHECK(ks_1d(a, a) == 0.0);
        // triangle-like bound on ECDF sup distances
        std::vector<double> c;
        for (int i = 0; i < 30; ++i) c.push_back(std::floor(rng.uniform01() * 8));
        CHECK(ks_1d(a, c) <= ks_1d(a, b) + ks_1d(b, c) + 1e-12);
    }
}

TEST_CASE("ks_1d_to_cdf hand values") {
    // single sample at the reference median
    std::vector<double> med{0.0};
    CHECK(ks_1d_to_cdf(med, [](double x) { return std_normal_cdf(x); }) ==
          doctest::Approx(0.5).epsilon(1e-12));
    // samples at uniform quantiles k/(n+1): statistic bounded by 1/(n+1)
    const int n = 99;
    std::vector<double> q;
    for (int k = 1; k <= n; ++k) q.push_back(static_cast<double>(k) / (n + 1));
    CHECK(ks_1d_to_cdf(q, [](double x) { return x; }) <= 1.0 / (n + 1) + 1e-12);
    CHECK_THROWS_AS(ks_1d_to_cdf({}, [](double) { return 0.5; }), MewError);
}

TEST_CASE("ks_2d hand values") {
    std::vector<Point2> a{{0, 0}, {1, 1}};
    CHECK(ks_2d(a, a) == 0.0);
    std::vector<Point2> pa{{0, 0}}, pb{{1, 1}};
    CHECK(ks_2d(pa, pb) == 1.0);
    std::vector<Point2> b{{0, 1}, {1, 0}};
    CHECK(ks_2d(a, b) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(ks_2d(a, b) == ks_2d(b, a));
}

TEST_CASE("pairwise_curves: identical chains give the zero curve") {
    SampleSeries s;
    for (int i = 1; i <= 400; ++i) {
        s.steps.push_back(i);
        s.values.push_back((i * 7) % 5);
    }
    auto curve = pairwise_curves({s, s, s}, {100, 200, 400}, 10);
    REQUIRE(curve.pairwise_mean.size() == 3);
    for (double v : curve.pairwise_mean) CHECK(v == 0.0);
}

TEST_CASE("pairwise_curves: iid chains from one law stay under the critical band") {
    RngStream rng(31415);
    auto draw_chain = [&](int count) {
        SampleSeries s;
        for (int i = 1; i <= count; ++i) {
            s.steps.push_back(i);
            // discrete law supported on 0..9
            s.values.push_back(std::floor(10.0 * rng.uniform01()));
        }
        return s;
    };
    std::vector<SampleSeries> chains{draw_chain(10000), draw_chain(10000)};
    auto curve = pairwise_curves(chains, {10000}, 1);
    CHECK(curve.pairwise_mean[0] < 0.05);  // two-sample critical value at n = 1e4
}

TEST_CASE("pairwise_curves guards") {
    SampleSeries s;
    for (int i = 1; i <= 100; ++i) {
        s.steps.push_back(i);
        s.values.push_back(i);
    }
    CHECK_THROWS_AS(pairwise_curves({s}, {50}, 1), MewError);          // one chain
    CHECK_THROWS_AS(pairwise_curves({s, s}, {500}, 1), MewError);      // beyond samples
    CHECK_THROWS_AS(pairwise_curves({s, s}, {100}, 200), MewError);    // thin too coarse
}

TEST_CASE("pairwise_curves distance to an exact reference CDF") {
    RngStream rng(7);
    std::vector<SampleSeries> chains(2);
    for (auto& c : chains)
        for (int i = 1; i <= 5000; ++i) {
            c.steps.push_back(i);
            c.values.push_back(rng.uniform01() < 0.5 ? 0.0 : 1.0);
        }
    KsReference ref;
    ref.cdf = [](double x) { return x < 0 ? 0.0 : (x < 1 ? 0.5 : 1.0); };
    auto curve = pairwise_curves(chains, {1000, 5000}, 1, &ref);
    REQUIRE(curve.to_target_mean.has_value());
    CHECK(curve.to_target_mean->back() < 0.03);
    // and the curve exports round-trip
    std::ostringstream csv;
    write_ks_curve_csv(csv, curve);
    CHECK(csv.str().find("step,pairwise_mean,to_target_mean") == 0);
    auto j = ks_curve_json(curve);
    CHECK(j["checkpoints"].size() == 2);
}

TEST_CASE("sweep fills a small grid deterministically") {
    DualGraph g = grid_graph(3, 3);
    ChainConfig cfg;
    cfg.steps = 1500;
    cfg.burn_in = 300;
    cfg.record_every = 5;
    cfg.seed = 99;
    cfg.d = 3;
    cfg.balance = {BalanceMode::node, 0.34};
    cfg.energy.terms.push_back({ObservableId::cut_edges, 0.05, 6.0, 0, 1.0});
    cfg.energy.terms.push_back({ObservableId::exp_transform, 0.5, 2.0, 0, 1.0});

    SweepAxis a1{"center:0", {5.0, 7.0}};
    SweepAxis a2{"beta:0", {0.02, 0.2}};
    auto grid1 = sweep(g, cfg, a1, a2, 3, "cut_edges", "exp_transform_0", 5, 2);
    auto grid2 = sweep(g, cfg, a1, a2, 3, "cut_edges", "exp_transform_0", 5, 4);
    REQUIRE(grid1.cells.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(grid1.cells[i] == grid2.cells[i]);  // thread count must not matter
        CHECK(grid1.cells[i] >= 0.0);
        CHECK(grid1.cells[i] <= 1.0);
    }
    std::ostringstream csv;
    write_sweep_csv(csv, grid1);
    CHECK(csv.str().find("center:0,beta:0,mean_pairwise_ks2d") == 0);
    CHECK(sweep_json(grid1)["cells"].size() == 4);
}

TEST_CASE("sweep propagates cell errors with coordinates") {
    DualGraph g = grid_graph(3, 3);
    ChainConfig cfg;
    cfg.steps = 100;
    cfg.seed = 1;
    cfg.d = 3;
    cfg.balance = {BalanceMode::node, 0.34};
    cfg.energy.terms.push_back({ObservableId::cut_edges, 0.05, 6.0, 0, 1.0});
    SweepAxis a1{"center:5", {1.0}};  // bad term index
    SweepAxis a2{"beta:0", {0.1}};
    try {
        sweep(g, cfg, a1, a2, 2, "cut_edges", "cut_edges", 1, 1);
        FAIL("expected a sweep cell error");
    } catch (const MewError& e) {
        CHECK(std::string(e.what()).find("cell (0, 0)") != std::string::npos);
    }
}

TEST_CASE("toy_tilt matches the exact truncated stationary law") {
    // the exact stationary density is Exp(lambda) * Gaussian energy weight,
    // i.e. a tilted Gaussian truncated at zero; at beta = 0.5 the truncation
    // is material and the sampled moments must match the truncated values
    for (double lambda : {0.5, 1.0, 2.0}) {
        auto r = toy_tilt(lambda, 0.5, 2.0, 400000, 8675309 + std::llround(10 * lambda));
        CHECK(r.mean == doctest::Approx(r.exact_mean).epsilon(0.02));
        CHECK(r.variance == doctest::Approx(r.exact_variance).epsilon(0.03));
    }
}

TEST_CASE("toy_tilt recovers the untruncated predictions at large beta") {
    // beta = 8: sigma = 0.25, means stay >= 1.9, truncation negligible
    std::vector<double> xs, shifts;
    for (double lambda : {0.5, 1.0, 2.0}) {
        auto r = toy_tilt(lambda, 8.0, 2.0, 600000, 17 + std::llround(10 * lambda));
        CHECK(r.exact_mean == doctest::Approx(r.predicted_mean).epsilon(1e-6));
        CHECK(r.mean == doctest::Approx(2.0 - lambda / 16.0).epsilon(0.01));
        CHECK(r.variance == doctest::Approx(1.0 / 16.0).epsilon(0.05));
        xs.push_back(lambda / 8.0);
        shifts.push_back(r.mean - 2.0);
    }
    // regression slope of shift against lambda/beta: -1/2
    double mx = (xs[0] + xs[1] + xs[2]) / 3, my = (shifts[0] + shifts[1] + shifts[2]) / 3;
    double num = 0, den = 0;
    for (int i = 0; i < 3; ++i) {
        num += (xs[i] - mx) * (shifts[i] - my);
        den += (xs[i] - mx) * (xs[i] - mx);
    }
    CHECK(num / den == doctest::Approx(-0.5).epsilon(0.1));
}

TEST_CASE("corrected toy chain recovers the target mean") {
    auto r = toy_tilt(1.0, 8.0, 2.0, 400000, 99, true);
    CHECK(r.predicted_mean == doctest::Approx(2.0));
    CHECK(r.mean == doctest::Approx(2.0).epsilon(0.01));
    CHECK(r.variance == doctest::Approx(1.0 / 16.0).epsilon(0.05));
}

TEST_CASE("truncated normal moments: reference values") {
    // alpha = -1: mean = m + sigma*phi(1)/Phi(1), known constants
    auto [m1, v1] = truncated_normal_moments(1.0, 1.0);
    CHECK(m1 == doctest::Approx(1.2876).epsilon(1e-3));
    CHECK(v1 == doctest::Approx(0.6297).epsilon(1e-3));
    // far from the boundary the truncation vanishes
    auto [m2, v2] = truncated_normal_moments(5.0, 0.5);
    CHECK(m2 == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(v2 == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("series_from_records extracts named observables") {
    std::vector<EnsembleRecord> records(3);
    for (int i = 0; i < 3; ++i) {
        records[i].step = 10 * (i + 1);
        records[i].observables = {{"cut_edges", 2.0 + i}, {"mean_median", 0.1 * i}};
    }
    auto s = series_from_records(records, "cut_edges", "mean_median");
    CHECK(s.steps == std::vector<std::int64_t>{10, 20, 30});
    CHECK(s.values == std::vector<double>{2, 3, 4});
    CHECK(s.values2.size() == 3);
    CHECK_THROWS_AS(series_from_records(records, "nope"), MewError);
}
