#include "mew/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace mew {

double ks_1d(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw MewError("ks_1d: empty sample");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
    std::size_t ia = 0, ib = 0;
    double sup = 0.0;
    while (ia < sa.size() || ib < sb.size()) {
        double x = (ib >= sb.size() || (ia < sa.size() && sa[ia] <= sb[ib])) ? sa[ia] : sb[ib];
        while (ia < sa.size() && sa[ia] == x) ++ia;
        while (ib < sb.size() && sb[ib] == x) ++ib;
        sup = std::max(sup, std::abs(ia / na - ib / nb));
    }
    return sup;
}

double ks_1d_to_cdf(std::span<const double> a, const std::function<double(double)>& cdf) {
    if (a.empty()) throw MewError("ks_1d_to_cdf: empty sample");
    std::vector<double> s(a.begin(), a.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double sup = 0.0;
    std::size_t i = 0;
    while (i < s.size()) {
        const double x = s[i];
        const double before = i / n;  // left limit of the ECDF at x
        std::size_t j = i;
        while (j < s.size() && s[j] == x) ++j;
        const double after = j / n;
        const double f = cdf(x);
        // left limits of both functions, so discrete references with jumps at
        // the sample points are compared jump against jump
        const double f_before = cdf(std::nextafter(x, -std::numeric_limits<double>::infinity()));
        sup = std::max({sup, std::abs(after - f), std::abs(f_before - before)});
        i = j;
    }
    return sup;
}

namespace {

double ks_2d_centered(std::span<const Point2> centers, std::span<const Point2> a,
                      std::span<const Point2> b) {
    double sup = 0.0;
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    for (const auto& c : centers) {
        // open quadrants around c: (++, -+, --, +-)
        int qa[4] = {0, 0, 0, 0}, qb[4] = {0, 0, 0, 0};
        for (const auto& p : a) {
            if (p.x > c.x && p.y > c.y) ++qa[0];
            else if (p.x < c.x && p.y > c.y) ++qa[1];
            else if (p.x < c.x && p.y < c.y) ++qa[2];
            else if (p.x > c.x && p.y < c.y) ++qa[3];
        }
        for (const auto& p : b) {
            if (p.x > c.x && p.y > c.y) ++qb[0];
            else if (p.x < c.x && p.y > c.y) ++qb[1];
            else if (p.x < c.x && p.y < c.y) ++qb[2];
            else if (p.x > c.x && p.y < c.y) ++qb[3];
        }
        for (int q = 0; q < 4; ++q)
            sup = std::max(sup, std::abs(qa[q] / na - qb[q] / nb));
    }
    return sup;
}

}  // namespace

double ks_2d(std::span<const Point2> a, std::span<const Point2> b) {
    if (a.empty() || b.empty()) throw MewError("ks_2d: empty sample");
    const double da = ks_2d_centered(a, a, b);
    const double db = ks_2d_centered(b, a, b);
    return 0.5 * (da + db);
}

SampleSeries series_from_records(const std::vector<EnsembleRecord>& records,
                                 const std::string& observable,
                                 const std::string& observable2) {
    SampleSeries s;
    auto value_of = [](const EnsembleRecord& r, const std::string& name, double* out) {
        for (const auto& [n, v] : r.observables)
            if (n == name) {
                *out = v;
                return true;
            }
        return false;
    };
    for (const auto& r : records) {
        double v = 0.0;
        if (!value_of(r, observable, &v))
            throw MewError("observable \"" + observable + "\" missing from records");
        s.steps.push_back(r.step);
        s.values.push_back(v);
        if (!observable2.empty()) {
            double v2 = 0.0;
            if (!value_of(r, observable2, &v2))
                throw MewError("observable \"" + observable2 + "\" missing from records");
            s.values2.push_back(v2);
        }
    }
    return s;
}

namespace {

// every thin-th record (the thin-th, 2 thin-th, ...) among the first `count`
template <typename T>
std::vector<T> thinned_prefix(const std::vector<T>& v, std::size_t count, int thin) {
    std::vector<T> out;
    for (std::size_t i = thin - 1; i < count; i += thin) out.push_back(v[i]);
    return out;
}

}  // namespace

KsCurve pairwise_curves(const std::vector<SampleSeries>& chains,
                        const std::vector<std::int64_t>& checkpoints, int thin,
                        const KsReference* reference, bool two_d) {
    if (chains.size() < 2) throw MewError("pairwise_curves needs at least two chains");
    if (thin < 1) throw MewError("thin must be positive");
    if (two_d)
        for (const auto& c : chains)
            if (c.values2.size() != c.values.size())
                throw MewError("2D curves need a second observable in every chain");

    KsCurve curve;
    curve.checkpoints = checkpoints;
    if (reference) curve.to_target_mean.emplace();

    for (std::int64_t cp : checkpoints) {
        // prefix lengths per chain
        std::vector<std::size_t> upto(chains.size());
        for (std::size_t c = 0; c < chains.size(); ++c) {
            const auto& steps = chains[c].steps;
            if (steps.empty() || cp > steps.back())
                throw MewError("checkpoint " + std::to_string(cp) +
                               " is beyond the available samples");
            std::size_t k = std::upper_bound(steps.begin(), steps.end(), cp) - steps.begin();
            if (k < static_cast<std::size_t>(thin))
                throw MewError("checkpoint " + std::to_string(cp) +
                               " leaves no thinned draw (thin = " + std::to_string(thin) + ")");
            upto[c] = k;
        }
        std::vector<std::vector<double>> xs(chains.size());
        std::vector<std::vector<Point2>> pts(chains.size());
        for (std::size_t c = 0; c < chains.size(); ++c) {
            xs[c] = thinned_prefix(chains[c].values, upto[c], thin);
            if (two_d) {
                auto ys = thinned_prefix(chains[c].values2, upto[c], thin);
                pts[c].resize(xs[c].size());
                for (std::size_t i = 0; i < xs[c].size(); ++i) pts[c][i] = {xs[c][i], ys[i]};
            }
        }
        double sum = 0.0;
        int pairs = 0;
        for (std::size_t i = 0; i < chains.size(); ++i)
            for (std::size_t j = i + 1; j < chains.size(); ++j) {
                sum += two_d ? ks_2d(pts[i], pts[j]) : ks_1d(xs[i], xs[j]);
                ++pairs;
            }
        curve.pairwise_mean.push_back(sum / pairs);

        if (reference) {
            if (two_d) throw MewError("distance-to-target is 1D only");
            double tsum = 0.0;
            for (std::size_t c = 0; c < chains.size(); ++c) {
                tsum += reference->samples.empty()
                            ? ks_1d_to_cdf(xs[c], reference->cdf)
                            : ks_1d(xs[c], reference->samples);
            }
            curve.to_target_mean->push_back(tsum / static_cast<double>(chains.size()));
        }
    }
    return curve;
}

void write_ks_curve_csv(std::ostream& out, const KsCurve& curve) {
    out << "step,pairwise_mean" << (curve.to_target_mean ? ",to_target_mean" : "") << "\n";
    for (std::size_t i = 0; i < curve.checkpoints.size(); ++i) {
        out << curve.checkpoints[i] << "," << curve.pairwise_mean[i];
        if (curve.to_target_mean) out << "," << (*curve.to_target_mean)[i];
        out << "\n";
    }
}

nlohmann::ordered_json ks_curve_json(const KsCurve& curve) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["type"] = "ks_curve";
    j["checkpoints"] = curve.checkpoints;
    j["pairwise_mean"] = curve.pairwise_mean;
    if (curve.to_target_mean) j["to_target_mean"] = *curve.to_target_mean;
    return j;
}

namespace {

void apply_axis(EnergySpec& spec, const std::string& param, double value) {
    auto colon = param.find(':');
    if (colon == std::string::npos)
        throw ConfigError("sweep axis parameter must look like beta:<idx> or center:<idx>");
    const std::string field = param.substr(0, colon);
    const int idx = std::stoi(param.substr(colon + 1));
    if (idx < 0 || idx >= static_cast<int>(spec.terms.size()))
        throw ConfigError("sweep axis term index out of range");
    if (field == "beta") spec.terms[idx].beta = value;
    else if (field == "center") spec.terms[idx].center = value;
    else throw ConfigError("sweep axis field must be beta or center");
}

}  // namespace

SweepGrid sweep(const DualGraph& g, const ChainConfig& base, const SweepAxis& axis1,
                const SweepAxis& axis2, int chain_count, const std::string& observable1,
                const std::string& observable2, int thin, int threads) {
    if (axis1.values.empty() || axis2.values.empty())
        throw ConfigError("sweep axes must be non-empty");
    SweepGrid grid;
    grid.axis1 = axis1;
    grid.axis2 = axis2;
    grid.cells.assign(axis1.values.size() * axis2.values.size(), 0.0);

    for (std::size_t i1 = 0; i1 < axis1.values.size(); ++i1) {
        for (std::size_t i2 = 0; i2 < axis2.values.size(); ++i2) {
            const std::size_t cell = i1 * axis2.values.size() + i2;
            try {
                ChainConfig cfg = base;
                apply_axis(cfg.energy, axis1.param, axis1.values[i1]);
                apply_axis(cfg.energy, axis2.param, axis2.values[i2]);
                cfg.seed = stream_seed(base.seed, 0x10000 + cell);
                auto results = run_ensemble(g, cfg, chain_count, threads);
                std::vector<SampleSeries> series;
                series.reserve(results.size());
                for (const auto& r : results)
                    series.push_back(series_from_records(r.records, observable1, observable2));
                // single-checkpoint pairwise 2D KS at the full budget
                std::vector<std::vector<Point2>> pts(series.size());
                for (std::size_t c = 0; c < series.size(); ++c) {
                    auto xs = thinned_prefix(series[c].values, series[c].values.size(), thin);
                    auto ys = thinned_prefix(series[c].values2, series[c].values2.size(), thin);
                    if (xs.empty()) throw MewError("sweep cell produced no thinned samples");
                    pts[c].resize(xs.size());
                    for (std::size_t k = 0; k < xs.size(); ++k) pts[c][k] = {xs[k], ys[k]};
                }
                double sum = 0.0;
                int pairs = 0;
                for (std::size_t a = 0; a < pts.size(); ++a)
                    for (std::size_t b = a + 1; b < pts.size(); ++b) {
                        sum += ks_2d(pts[a], pts[b]);
                        ++pairs;
                    }
                grid.cells[cell] = pairs > 0 ? sum / pairs : 0.0;
            } catch (const std::exception& e) {
                throw MewError("sweep cell (" + std::to_string(i1) + ", " + std::to_string(i2) +
                               "): " + e.what());
            }
        }
    }
    return grid;
}

void write_sweep_csv(std::ostream& out, const SweepGrid& grid) {
    out << grid.axis1.param << "," << grid.axis2.param << ",mean_pairwise_ks2d\n";
    for (std::size_t i1 = 0; i1 < grid.axis1.values.size(); ++i1)
        for (std::size_t i2 = 0; i2 < grid.axis2.values.size(); ++i2)
            out << grid.axis1.values[i1] << "," << grid.axis2.values[i2] << ","
                << grid.cells[i1 * grid.axis2.values.size() + i2] << "\n";
}

nlohmann::ordered_json sweep_json(const SweepGrid& grid) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["type"] = "sweep_grid";
    j["axis1"] = {{"param", grid.axis1.param}, {"values", grid.axis1.values}};
    j["axis2"] = {{"param", grid.axis2.param}, {"values", grid.axis2.values}};
    j["cells"] = grid.cells;
    return j;
}

std::pair<double, double> truncated_normal_moments(double m, double sigma) {
    const double alpha = -m / sigma;
    const double phi = std::exp(-0.5 * alpha * alpha) / std::sqrt(2.0 * std::numbers::pi);
    const double z = 1.0 - std_normal_cdf(alpha);
    const double lam = phi / z;
    const double mean = m + sigma * lam;
    const double var = sigma * sigma * (1.0 + alpha * lam - lam * lam);
    return {mean, var};
}

ToyTiltResult toy_tilt(double lambda, double beta, double mu, std::int64_t steps,
                       std::uint64_t seed, bool corrected) {
    if (!(lambda > 0.0) || !(beta > 0.0)) throw ConfigError("toy_tilt: lambda, beta must be > 0");
    if (steps < 1) throw ConfigError("toy_tilt: steps must be positive");
    RngStream rng(seed);

    auto energy = [&](double x) { return -beta * (x - mu) * (x - mu); };
    double x = rng.exponential(lambda);
    double mean = 0.0, m2 = 0.0;
    std::int64_t accepted = 0;
    for (std::int64_t i = 1; i <= steps; ++i) {
        const double y = rng.exponential(lambda);
        double log_a = energy(y) - energy(x);
        if (corrected) log_a += lambda * (y - x);  // Hastings proposal correction
        if (log_a >= 0.0 || std::log(rng.uniform_open01()) <= log_a) {
            x = y;
            ++accepted;
        }
        const double delta = x - mean;
        mean += delta / static_cast<double>(i);
        m2 += delta * (x - mean);
    }

    ToyTiltResult r;
    r.mean = mean;
    r.variance = m2 / static_cast<double>(steps);
    r.accepted = accepted;
    r.steps = steps;
    const double sigma = std::sqrt(1.0 / (2.0 * beta));
    const double m_star = corrected ? mu : mu - lambda / (2.0 * beta);
    r.predicted_mean = m_star;
    r.predicted_variance = sigma * sigma;
    auto [em, ev] = truncated_normal_moments(m_star, sigma);
    r.exact_mean = em;
    r.exact_variance = ev;
    return r;
}

}  // namespace mew
