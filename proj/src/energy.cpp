#include "mew/energy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mew {

int cut_edges(const DualGraph& g, const Partition& p) {
    int count = 0;
    for (const auto& [a, b] : g.edges())
        if (p.assignment[a] != p.assignment[b]) ++count;
    return count;
}

namespace {

std::vector<double> all_dem_shares(const DualGraph& g, const Partition& p) {
    if (!g.has_votes()) throw MewError("dem_share: graph has no vote attributes");
    std::vector<double> dem(p.d, 0.0), rep(p.d, 0.0);
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
        dem[p.assignment[v]] += g.dem_votes()[v];
        rep[p.assignment[v]] += g.rep_votes()[v];
    }
    std::vector<double> shares(p.d);
    for (int i = 0; i < p.d; ++i) {
        double total = dem[i] + rep[i];
        if (!(total > 0.0))
            throw MewError("dem_share: part " + std::to_string(i) + " has zero total votes");
        shares[i] = dem[i] / total;
    }
    return shares;
}

double share_mean_minus_median(std::vector<double> shares) {
    double mean = 0.0;
    for (double s : shares) mean += s;
    mean /= static_cast<double>(shares.size());
    std::sort(shares.begin(), shares.end());
    const std::size_t n = shares.size();
    double median = (n % 2 == 1) ? shares[n / 2] : 0.5 * (shares[n / 2 - 1] + shares[n / 2]);
    return mean - median;
}

}  // namespace

double dem_share(const DualGraph& g, const Partition& p, int part) {
    if (part < 0 || part >= p.d) throw MewError("dem_share: part index out of range");
    return all_dem_shares(g, p)[part];
}

double mean_median(const DualGraph& g, const Partition& p) {
    if (p.d < 2) throw MewError("mean_median requires at least two parts");
    return share_mean_minus_median(all_dem_shares(g, p));
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

namespace {

double exp_transform_value(double weight_sum, int part_size, double lambda,
                           long* clamp_events) {
    const double mean = part_size / 2.0;
    const double sd = std::sqrt(part_size / 12.0);
    double u = std_normal_cdf((weight_sum - mean) / sd);
    if (u > 1.0 - 1e-15) {
        u = 1.0 - 1e-15;
        if (clamp_events) ++*clamp_events;
    }
    return -std::log1p(-u) / lambda;
}

}  // namespace

double exp_transform(const DualGraph& g, const Partition& p, double lambda, int part,
                     std::span<const double> weights, long* clamp_events) {
    if (part < 0 || part >= p.d) throw MewError("exp_transform: part index out of range");
    if (!(lambda > 0.0)) throw MewError("exp_transform: lambda must be positive");
    if (static_cast<int>(weights.size()) != g.vertex_count())
        throw MewError("exp_transform: weight column length mismatch");
    double s = 0.0;
    int size = 0;
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
        if (p.assignment[v] == part) {
            s += weights[v];
            ++size;
        }
    }
    return exp_transform_value(s, size, lambda, clamp_events);
}

double DegeneracyCache::part_log_trees(const DualGraph& g, PartKey key,
                                       const std::function<std::vector<VertexId>()>& vertices) {
    auto it = map_.find(key);
    if (it != map_.end()) return it->second;
    if (map_.size() >= cap_) map_.clear();
    std::vector<VertexId> verts = vertices();
    double value = log_spanning_tree_count(g, verts);
    map_.emplace(key, value);
    return value;
}

double log_degeneracy(const DualGraph& g, const Partition& p, DegeneracyCache* cache) {
    std::vector<std::vector<VertexId>> parts(p.d);
    for (VertexId v = 0; v < g.vertex_count(); ++v) parts[p.assignment[v]].push_back(v);
    double total = 0.0;
    for (int i = 0; i < p.d; ++i) {
        if (parts[i].empty()) throw MewError("log_degeneracy: empty part");
        if (cache) {
            total += cache->part_log_trees(g, part_key_of(parts[i]),
                                           [&]() { return parts[i]; });
        } else {
            total += log_spanning_tree_count(g, parts[i]);
        }
    }
    if (p.d > 1) total += log_spanning_tree_count(quotient_multigraph(g, p));
    return total;
}

// ---- EnergySpec ----

namespace {

ObservableId observable_id_from(const std::string& name) {
    if (name == "cut_edges") return ObservableId::cut_edges;
    if (name == "dem_share") return ObservableId::dem_share;
    if (name == "mean_median") return ObservableId::mean_median;
    if (name == "exp_transform") return ObservableId::exp_transform;
    if (name == "constant_zero") return ObservableId::constant_zero;
    throw ParseError("unknown observable \"" + name + "\"");
}

std::string observable_id_name(ObservableId id) {
    switch (id) {
        case ObservableId::cut_edges: return "cut_edges";
        case ObservableId::dem_share: return "dem_share";
        case ObservableId::mean_median: return "mean_median";
        case ObservableId::exp_transform: return "exp_transform";
        case ObservableId::constant_zero: return "constant_zero";
    }
    return "?";
}

}  // namespace

std::string observable_name(const EnergyTerm& t) {
    switch (t.observable) {
        case ObservableId::dem_share: return "dem_share_" + std::to_string(t.part);
        case ObservableId::exp_transform: return "exp_transform_" + std::to_string(t.part);
        default: return observable_id_name(t.observable);
    }
}

EnergySpec EnergySpec::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("energy spec must be a JSON object");
    EnergySpec spec;
    if (j.contains("special")) {
        const auto& s = j["special"];
        if (!s.is_string() || s.get<std::string>() != "spanning_tree")
            throw ParseError("energy spec: \"special\" must be \"spanning_tree\"");
        spec.spanning_tree_form = true;
    }
    if (j.contains("gamma")) {
        if (!j["gamma"].is_number()) throw ParseError("energy spec: gamma must be a number");
        spec.gamma = j["gamma"].get<double>();
    }
    if (j.contains("terms")) {
        if (!j["terms"].is_array()) throw ParseError("energy spec: terms must be an array");
        for (const auto& jt : j["terms"]) {
            if (!jt.is_object() || !jt.contains("observable") || !jt["observable"].is_string())
                throw ParseError("energy term must be an object naming an observable");
            EnergyTerm t;
            t.observable = observable_id_from(jt["observable"].get<std::string>());
            if (jt.contains("beta")) t.beta = jt["beta"].get<double>();
            if (jt.contains("center")) t.center = jt["center"].get<double>();
            if (jt.contains("part")) t.part = jt["part"].get<int>();
            if (jt.contains("lambda")) t.lambda = jt["lambda"].get<double>();
            spec.terms.push_back(t);
        }
    }
    return spec;
}

nlohmann::ordered_json EnergySpec::to_json() const {
    nlohmann::ordered_json j;
    j["terms"] = nlohmann::ordered_json::array();
    for (const auto& t : terms) {
        nlohmann::ordered_json jt;
        jt["observable"] = observable_id_name(t.observable);
        jt["beta"] = t.beta;
        jt["center"] = t.center;
        if (t.observable == ObservableId::dem_share ||
            t.observable == ObservableId::exp_transform)
            jt["part"] = t.part;
        if (t.observable == ObservableId::exp_transform) jt["lambda"] = t.lambda;
        j["terms"].push_back(jt);
    }
    if (spanning_tree_form) j["special"] = "spanning_tree";
    j["gamma"] = gamma;
    return j;
}

void EnergySpec::validate(int d) const {
    if (terms.empty() && !spanning_tree_form)
        throw ConfigError("energy spec needs at least one term or the spanning_tree form");
    if (!std::isfinite(gamma) || gamma < 0.0)
        throw ConfigError("energy spec: gamma must be finite and non-negative");
    for (const auto& t : terms) {
        if (!std::isfinite(t.beta) || !std::isfinite(t.center))
            throw ConfigError("energy spec: weights and centers must be finite");
        if (t.observable == ObservableId::dem_share ||
            t.observable == ObservableId::exp_transform) {
            if (t.part < 0 || t.part >= d)
                throw ConfigError("energy spec: part index out of range for d = " +
                                  std::to_string(d));
        }
        if (t.observable == ObservableId::exp_transform && !(t.lambda > 0.0))
            throw ConfigError("energy spec: exp_transform lambda must be positive");
        if (t.observable == ObservableId::mean_median && d < 2)
            throw ConfigError("energy spec: mean_median needs d >= 2");
    }
}

// ---- EnergyModel ----

EnergyModel::EnergyModel(const DualGraph& g, EnergySpec spec, int d, std::uint64_t weight_seed)
    : g_(&g), spec_(std::move(spec)), d_(d) {
    spec_.validate(d);
    if (needs_votes() && !g.has_votes())
        throw ConfigError("energy spec uses vote shares but the graph has no vote attributes");
    bool any_exp = false;
    for (const auto& t : spec_.terms)
        if (t.observable == ObservableId::exp_transform) any_exp = true;
    if (any_exp) {
        RngStream ws(weight_seed);
        aux_weights_.resize(g.vertex_count());
        for (auto& w : aux_weights_) w = ws.uniform01();
    }
}

bool EnergyModel::needs_votes() const {
    for (const auto& t : spec_.terms)
        if (t.observable == ObservableId::dem_share ||
            t.observable == ObservableId::mean_median)
            return true;
    return false;
}

namespace {

double term_value(const EnergyTerm& t, const PartTallies& tal, long* clamp_events) {
    switch (t.observable) {
        case ObservableId::cut_edges:
            return static_cast<double>(tal.cut_count);
        case ObservableId::dem_share: {
            double total = tal.dem[t.part] + tal.rep[t.part];
            if (!(total > 0.0)) throw MewError("dem_share: part has zero total votes");
            return tal.dem[t.part] / total;
        }
        case ObservableId::mean_median: {
            std::vector<double> shares(tal.dem.size());
            for (std::size_t i = 0; i < shares.size(); ++i) {
                double total = tal.dem[i] + tal.rep[i];
                if (!(total > 0.0)) throw MewError("mean_median: part has zero total votes");
                shares[i] = tal.dem[i] / total;
            }
            return share_mean_minus_median(std::move(shares));
        }
        case ObservableId::exp_transform:
            return exp_transform_value(tal.aux[t.part], tal.sizes[t.part], t.lambda,
                                       clamp_events);
        case ObservableId::constant_zero:
            return 0.0;
    }
    return 0.0;
}

}  // namespace

double EnergyModel::energy(const PartTallies& t) const {
    double j = 0.0;
    for (const auto& term : spec_.terms) {
        double v = term_value(term, t, &clamp_events_);
        j -= term.beta * (v - term.center) * (v - term.center);
    }
    return j;
}

std::vector<std::pair<std::string, double>> EnergyModel::observables(const PartTallies& t) const {
    std::vector<std::pair<std::string, double>> out;
    out.emplace_back("cut_edges", static_cast<double>(t.cut_count));
    for (const auto& term : spec_.terms) {
        std::string name = observable_name(term);
        bool seen = false;
        for (const auto& [n, v] : out)
            if (n == name) seen = true;
        if (!seen) out.emplace_back(std::move(name), term_value(term, t, &clamp_events_));
    }
    return out;
}

PartTallies EnergyModel::tallies(const Partition& p) const {
    const DualGraph& g = *g_;
    PartTallies t;
    t.sizes.assign(p.d, 0);
    if (needs_votes()) {
        t.dem.assign(p.d, 0.0);
        t.rep.assign(p.d, 0.0);
    }
    if (needs_aux()) t.aux.assign(p.d, 0.0);
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
        int lbl = p.assignment[v];
        ++t.sizes[lbl];
        if (needs_votes()) {
            t.dem[lbl] += g.dem_votes()[v];
            t.rep[lbl] += g.rep_votes()[v];
        }
        if (needs_aux()) t.aux[lbl] += aux_weights_[v];
    }
    t.cut_count = cut_edges(g, p);
    return t;
}

double EnergyModel::log_target_ratio_terms(double j_old, double j_new, double lntau_old,
                                           double lntau_new) const {
    if (spec_.spanning_tree_form) {
        if (spec_.gamma == 1.0) return 0.0;  // symbolic cancellation
        return (1.0 - spec_.gamma) * (lntau_new - lntau_old);
    }
    return (j_new - j_old) + spec_.gamma * (lntau_old - lntau_new);
}

double EnergyModel::log_target_ratio(const Partition& old_p, const Partition& new_p,
                                     DegeneracyCache* cache) const {
    if (uniform_on_lifted()) return 0.0;
    double lt_old = 0.0, lt_new = 0.0;
    if (needs_tau()) {
        lt_old = log_degeneracy(*g_, old_p, cache);
        lt_new = log_degeneracy(*g_, new_p, cache);
    }
    double j_old = 0.0, j_new = 0.0;
    if (!spec_.spanning_tree_form) {
        j_old = energy(tallies(old_p));
        j_new = energy(tallies(new_p));
    }
    return log_target_ratio_terms(j_old, j_new, lt_old, lt_new);
}

}  // namespace mew
