#pragma once

#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mew/state.hpp"

namespace mew {

// ---- observables over partitions ----

int cut_edges(const DualGraph& g, const Partition& p);

// share of democratic votes in the given (canonical, 0-based) part; throws
// MewError when vote attributes are missing or the part's total vote is zero
double dem_share(const DualGraph& g, const Partition& p, int part);

// mean(dem shares) - median(dem shares) across parts; even d uses the
// midpoint of the two central values. Positive = dem mean above dem median.
double mean_median(const DualGraph& g, const Partition& p);

double std_normal_cdf(double z);  // via erfc, |error| < 1e-12

// Probability-integral-transform observable: the part's summed weights,
// standardized with mean |part|/2 and variance |part|/12, pushed through the
// standard normal CDF and the Exp(lambda) inverse CDF. U is clamped at
// 1 - 1e-15; clamp_events (when given) counts how often.
double exp_transform(const DualGraph& g, const Partition& p, double lambda, int part,
                     std::span<const double> weights, long* clamp_events = nullptr);

// ---- degeneracy factor ----

// Chain-local cache of per-part ln(tree count), keyed by the part's
// vertex-set fingerprint.
class DegeneracyCache {
public:
    double part_log_trees(const DualGraph& g, PartKey key,
                          const std::function<std::vector<VertexId>()>& vertices);
    std::size_t size() const { return map_.size(); }
    void clear() { map_.clear(); }

private:
    std::unordered_map<PartKey, double, PartKeyHash> map_;
    std::size_t cap_ = std::size_t{1} << 20;
};

// ln tau(xi) = sum_i ln t(xi_i) + ln t(Q): per-part spanning tree counts plus
// the quotient multigraph's. Throws DisconnectedSubsetError on an invalid
// (disconnected-part) partition.
double log_degeneracy(const DualGraph& g, const Partition& p, DegeneracyCache* cache = nullptr);

// ---- energy specification ----

enum class ObservableId { cut_edges, dem_share, mean_median, exp_transform, constant_zero };

struct EnergyTerm {
    ObservableId observable = ObservableId::constant_zero;
    double beta = 0.0;
    double center = 0.0;
    int part = 0;         // dem_share / exp_transform
    double lambda = 1.0;  // exp_transform
};

// J(xi) = -sum_i beta_i (obs_i(xi) - center_i)^2, or the spanning-tree form
// J = ln tau. gamma is the degeneracy discount exponent (tau^gamma in the
// target); 1 is the full correction.
struct EnergySpec {
    std::vector<EnergyTerm> terms;
    bool spanning_tree_form = false;
    double gamma = 1.0;

    static EnergySpec from_json(const nlohmann::json& j);
    nlohmann::ordered_json to_json() const;
    void validate(int d) const;  // throws ConfigError
};

std::string observable_name(const EnergyTerm& t);

// per-part data (canonical order) that observables are evaluated from
struct PartTallies {
    std::vector<int> sizes;
    std::vector<double> dem, rep;  // empty when votes are unused
    std::vector<double> aux;       // exp-transform weight sums; empty when unused
    int cut_count = 0;
};

/*
 * Runtime form of an EnergySpec bound to a graph: draws and owns the
 * exp-transform weight column (from the run's configuration stream, so the
 * observable is one fixed function of the partition for the whole run),
 * evaluates J and named observables, and forms the log target ratio
 * ln p(x')/p(x) = [J' - J] + gamma [ln tau - ln tau'].
 */
class EnergyModel {
public:
    EnergyModel(const DualGraph& g, EnergySpec spec, int d, std::uint64_t weight_seed);

    const EnergySpec& spec() const { return spec_; }
    const DualGraph& graph() const { return *g_; }
    int part_count() const { return d_; }

    bool needs_votes() const;
    bool needs_aux() const { return !aux_weights_.empty(); }
    const std::vector<double>& aux_weights() const { return aux_weights_; }

    // spanning-tree form at gamma = 1: the target is uniform on the lifted
    // space and the ratio is identically zero (resolved symbolically)
    bool uniform_on_lifted() const {
        return spec_.spanning_tree_form && spec_.gamma == 1.0;
    }
    bool needs_tau() const {
        if (spec_.spanning_tree_form) return spec_.gamma != 1.0;
        return spec_.gamma != 0.0;
    }

    double energy(const PartTallies& t) const;  // J (quadratic form only)
    std::vector<std::pair<std::string, double>> observables(const PartTallies& t) const;

    PartTallies tallies(const Partition& p) const;  // from scratch

    double log_target_ratio_terms(double j_old, double j_new, double lntau_old,
                                  double lntau_new) const;
    // from-scratch convenience over two partitions
    double log_target_ratio(const Partition& old_p, const Partition& new_p,
                            DegeneracyCache* cache = nullptr) const;

    long clamp_events() const { return clamp_events_; }

private:
    const DualGraph* g_ = nullptr;
    EnergySpec spec_;
    int d_ = 0;
    std::vector<double> aux_weights_;
    mutable long clamp_events_ = 0;
};

}  // namespace mew
