#include "mew/chain.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <thread>

namespace mew {

void ChainConfig::validate() const {
    if (steps < 1) throw ConfigError("steps must be positive");
    if (burn_in < 0 || burn_in >= steps) throw ConfigError("burn_in must satisfy 0 <= burn_in < steps");
    if (record_every < 1 || record_every > steps)
        throw ConfigError("record_every must satisfy 1 <= record_every <= steps");
    if (d < 2) throw ConfigError("district count d must be at least 2");
    if (!(balance.epsilon >= 0.0) || balance.epsilon >= 1.0)
        throw ConfigError("epsilon must lie in [0, 1)");
    if (mode == ChainMode::uniform_single_step && (p_cycle < 0.0 || p_cycle > 1.0))
        throw ConfigError("p_cycle must lie in [0, 1]");
    if (max_init_attempts < 1) throw ConfigError("max_init_attempts must be positive");
    energy.validate(d);
}

nlohmann::ordered_json ChainConfig::to_json() const {
    nlohmann::ordered_json j;
    j["steps"] = steps;
    j["burn_in"] = burn_in;
    j["record_every"] = record_every;
    j["seed"] = seed;
    j["districts"] = d;
    j["balance_mode"] = balance.mode == BalanceMode::population ? "population" : "node";
    j["epsilon"] = balance.epsilon;
    j["energy"] = energy.to_json();
    j["mode"] = mode == ChainMode::metropolis_composite ? "composite" : "single";
    j["p_cycle"] = p_cycle;
    j["record_assignments"] = record_assignments;
    j["max_init_attempts"] = max_init_attempts;
    return j;
}

ChainRunner::ChainRunner(const DualGraph& g, const ChainConfig& cfg, std::uint64_t derived_seed)
    : g_(&g),
      cfg_(cfg),
      energy_(g, cfg.energy, cfg.d, stream_seed(cfg.seed, 0)),
      rng_(derived_seed),
      state_(initial_state(g, cfg.d, cfg.balance, rng_, cfg.max_init_attempts)) {
    cfg_.validate();
    summary_.derived_seed = derived_seed;
    if (energy_.needs_votes()) {
        attr_dem_ = state_.track_attribute(g.dem_votes());
        attr_rep_ = state_.track_attribute(g.rep_votes());
    }
    if (energy_.needs_aux()) attr_aux_ = state_.track_attribute(energy_.aux_weights());

    const bool target_math =
        cfg_.mode == ChainMode::metropolis_composite && !energy_.uniform_on_lifted();
    if (target_math && !energy_.spec().spanning_tree_form)
        current_j_ = energy_.energy(current_tallies());
    if (target_math && energy_.needs_tau()) {
        part_log_trees_.assign(cfg_.d, 0.0);
        for (int lbl = 0; lbl < cfg_.d; ++lbl) {
            part_log_trees_[lbl] = cache_.part_log_trees(
                g, state_.part_key(lbl), [&]() { return state_.part_members(lbl); });
            parts_log_trees_sum_ += part_log_trees_[lbl];
        }
        current_quotient_lnt_ = log_spanning_tree_count(state_.quotient());
    }
}

PartTallies ChainRunner::current_tallies() const {
    std::vector<int> canon = state_.canonical_of_stable();
    PartTallies t;
    t.sizes.assign(cfg_.d, 0);
    if (attr_dem_ >= 0) {
        t.dem.assign(cfg_.d, 0.0);
        t.rep.assign(cfg_.d, 0.0);
    }
    if (attr_aux_ >= 0) t.aux.assign(cfg_.d, 0.0);
    for (int lbl = 0; lbl < cfg_.d; ++lbl) {
        int c = canon[lbl];
        t.sizes[c] = state_.part_size(lbl);
        if (attr_dem_ >= 0) {
            t.dem[c] = state_.part_attr_sum(attr_dem_, lbl);
            t.rep[c] = state_.part_attr_sum(attr_rep_, lbl);
        }
        if (attr_aux_ >= 0) t.aux[c] = state_.part_attr_sum(attr_aux_, lbl);
    }
    t.cut_count = state_.cut_edge_count();
    return t;
}

PartTallies ChainRunner::tallies_after(const StateDelta& delta) const {
    // canonical order under the post-move min vertices
    std::vector<VertexId> minv(cfg_.d);
    for (int lbl = 0; lbl < cfg_.d; ++lbl) minv[lbl] = state_.part_min_vertex(lbl);
    std::vector<int> dirty_pos(cfg_.d, -1);
    for (std::size_t i = 0; i < delta.dirty_labels.size(); ++i) {
        minv[delta.dirty_labels[i]] = delta.new_min_vertex[i];
        dirty_pos[delta.dirty_labels[i]] = static_cast<int>(i);
    }
    std::vector<int> order(cfg_.d);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return minv[a] < minv[b]; });

    PartTallies t;
    t.sizes.assign(cfg_.d, 0);
    if (attr_dem_ >= 0) {
        t.dem.assign(cfg_.d, 0.0);
        t.rep.assign(cfg_.d, 0.0);
    }
    if (attr_aux_ >= 0) t.aux.assign(cfg_.d, 0.0);
    for (int c = 0; c < cfg_.d; ++c) {
        int lbl = order[c];
        int i = dirty_pos[lbl];
        t.sizes[c] = i >= 0 ? delta.new_size[i] : state_.part_size(lbl);
        if (attr_dem_ >= 0) {
            t.dem[c] = i >= 0 ? delta.new_attr_sums[attr_dem_][i]
                              : state_.part_attr_sum(attr_dem_, lbl);
            t.rep[c] = i >= 0 ? delta.new_attr_sums[attr_rep_][i]
                              : state_.part_attr_sum(attr_rep_, lbl);
        }
        if (attr_aux_ >= 0)
            t.aux[c] = i >= 0 ? delta.new_attr_sums[attr_aux_][i]
                              : state_.part_attr_sum(attr_aux_, lbl);
    }
    t.cut_count = state_.cut_edge_count() + delta.cut_delta;
    return t;
}

double ChainRunner::current_log_degeneracy() const {
    return log_degeneracy(*g_, state_.partition(), nullptr);
}

RejectReason ChainRunner::step() {
    ++summary_.steps;
    StepTrace trace;
    trace.log_u = std::numeric_limits<double>::quiet_NaN();

    Proposal p = cfg_.mode == ChainMode::metropolis_composite
                     ? propose(state_, rng_)
                     : propose_single_step(state_, rng_, cfg_.p_cycle);

    auto finish = [&](RejectReason reason) {
        trace.reason = reason;
        trace.accepted = reason == RejectReason::none;
        if (reason == RejectReason::none) ++summary_.accepted;
        if (trace_) trace_->push_back(trace);
        if (paranoid_) {
            state_.validate();
            PartTallies scratch = energy_.tallies(state_.partition());
            PartTallies inc = current_tallies();
            if (scratch.cut_count != inc.cut_count)
                throw MewError("paranoid: incremental cut count diverged");
            for (int i = 0; i < cfg_.d; ++i) {
                if (scratch.sizes[i] != inc.sizes[i])
                    throw MewError("paranoid: incremental part size diverged");
            }
        }
        return reason;
    };

    if (p.collision) {
        ++summary_.collision_rejects;
        return finish(RejectReason::collision);
    }
    const double ratio = transition_ratio(p);
    trace.transition_ratio = ratio;
    if (!(ratio > 0.0)) {
        ++summary_.zero_ratio_rejects;
        return finish(RejectReason::zero_ratio);
    }

    StateDelta delta = build_delta(state_, p);
    if (!weights_balanced(state_.weights_after(delta), total_balance_weight(*g_, cfg_.balance),
                          cfg_.d, cfg_.balance.epsilon)) {
        ++summary_.balance_rejects;
        return finish(RejectReason::balance);
    }

    double j_new = current_j_;
    std::vector<double> dirty_lnt;
    double quot_lnt_new = 0.0;
    double log_tr = 0.0;

    if (cfg_.mode == ChainMode::metropolis_composite && !energy_.uniform_on_lifted()) {
        double lntau_old = 0.0, lntau_new = 0.0;
        if (energy_.needs_tau()) {
            double parts_new = parts_log_trees_sum_;
            dirty_lnt.resize(delta.dirty_labels.size());
            for (std::size_t i = 0; i < delta.dirty_labels.size(); ++i) {
                dirty_lnt[i] = cache_.part_log_trees(*g_, delta.new_key[i],
                                                     [&]() { return delta.new_members[i]; });
                parts_new += dirty_lnt[i] - part_log_trees_[delta.dirty_labels[i]];
            }
            // quotient multiplicities after the move
            Multigraph q;
            q.vertex_count = cfg_.d;
            std::vector<double> mult(static_cast<std::size_t>(cfg_.d) * cfg_.d, 0.0);
            for (int i = 0; i < cfg_.d; ++i)
                for (int j = i + 1; j < cfg_.d; ++j)
                    mult[static_cast<std::size_t>(i) * cfg_.d + j] = state_.cut_multiplicity(i, j);
            for (const auto& ev : delta.edge_relabels) {
                if (ev.old_a != ev.old_b) {
                    int i = std::min(ev.old_a, ev.old_b), j = std::max(ev.old_a, ev.old_b);
                    mult[static_cast<std::size_t>(i) * cfg_.d + j] -= 1.0;
                }
                if (ev.new_a != ev.new_b) {
                    int i = std::min(ev.new_a, ev.new_b), j = std::max(ev.new_a, ev.new_b);
                    mult[static_cast<std::size_t>(i) * cfg_.d + j] += 1.0;
                }
            }
            for (int i = 0; i < cfg_.d; ++i)
                for (int j = i + 1; j < cfg_.d; ++j) {
                    double m = mult[static_cast<std::size_t>(i) * cfg_.d + j];
                    if (m > 0.0) q.edges.emplace_back(i, j, m);
                }
            quot_lnt_new = log_spanning_tree_count(q);
            lntau_old = parts_log_trees_sum_ + current_quotient_lnt_;
            lntau_new = parts_new + quot_lnt_new;
        }
        if (!energy_.spec().spanning_tree_form) j_new = energy_.energy(tallies_after(delta));
        log_tr = energy_.log_target_ratio_terms(current_j_, j_new, lntau_old, lntau_new);
        trace.log_target_ratio = log_tr;

        const double log_accept = log_tr + std::log(ratio);
        if (log_accept < 0.0) {
            const double u = rng_.uniform_open01();
            trace.log_u = std::log(u);
            if (trace.log_u > log_accept) {
                ++summary_.metropolis_rejects;
                return finish(RejectReason::metropolis);
            }
        }
    }

    // accept
    state_.commit(delta);
    current_j_ = j_new;
    if (!dirty_lnt.empty() || (energy_.needs_tau() && !part_log_trees_.empty())) {
        for (std::size_t i = 0; i < delta.dirty_labels.size(); ++i) {
            parts_log_trees_sum_ += dirty_lnt[i] - part_log_trees_[delta.dirty_labels[i]];
            part_log_trees_[delta.dirty_labels[i]] = dirty_lnt[i];
        }
        current_quotient_lnt_ = quot_lnt_new;
    }
    return finish(RejectReason::none);
}

EnsembleRecord ChainRunner::make_record(std::int64_t step_index) const {
    EnsembleRecord r;
    r.step = step_index;
    r.observables = energy_.observables(current_tallies());
    if (cfg_.record_assignments) r.assignment = state_.partition().assignment;
    return r;
}

ChainResult run_chain(const DualGraph& g, const ChainConfig& cfg) {
    auto results = run_ensemble(g, cfg, 1, 1);
    return std::move(results[0]);
}

std::vector<ChainResult> run_ensemble(const DualGraph& g, const ChainConfig& cfg,
                                      int chain_count, int threads) {
    cfg.validate();
    if (chain_count < 1) throw ConfigError("chain_count must be at least 1");
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, chain_count));

    std::vector<ChainResult> results(chain_count);
    std::vector<std::string> failures(chain_count);
    std::atomic<int> next{0};

    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= chain_count) return;
            try {
                const auto t0 = std::chrono::steady_clock::now();
                ChainRunner runner(g, cfg, chain_seed(cfg.seed, i));
                std::vector<EnsembleRecord> records;
                if (cfg.record_every <= cfg.steps - cfg.burn_in)
                    records.reserve((cfg.steps - cfg.burn_in) / cfg.record_every + 1);
                for (std::int64_t s = 1; s <= cfg.steps; ++s) {
                    RejectReason reason = runner.step();
                    if (s > cfg.burn_in && (s - cfg.burn_in) % cfg.record_every == 0) {
                        EnsembleRecord rec = runner.make_record(s);
                        rec.accepted = reason == RejectReason::none;
                        records.push_back(std::move(rec));
                    }
                }
                ChainSummary sum = runner.summary();
                sum.acceptance_rate =
                    static_cast<double>(sum.accepted) / static_cast<double>(sum.steps);
                sum.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                                  .count();
                results[i] = ChainResult{std::move(records), sum};
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        }
    };

    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (int i = 0; i < chain_count; ++i)
        if (!failures[i].empty())
            throw MewError("chain " + std::to_string(i) + ": " + failures[i]);
    return results;
}

void write_records_jsonl(std::ostream& out, const std::vector<EnsembleRecord>& records) {
    nlohmann::ordered_json header;
    header["schema_version"] = 1;
    header["type"] = "mew_ensemble";
    out << header.dump() << "\n";
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["step"] = r.step;
        j["accepted"] = r.accepted;
        nlohmann::ordered_json obs;
        for (const auto& [name, value] : r.observables) obs[name] = value;
        j["observables"] = std::move(obs);
        if (r.assignment) j["assignment"] = *r.assignment;
        out << j.dump() << "\n";
    }
}

std::vector<EnsembleRecord> read_records_jsonl(std::istream& in) {
    std::vector<EnsembleRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::ordered_json j;
        try {
            j = nlohmann::ordered_json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad ensemble JSONL line: ") + e.what());
        }
        if (!j.is_object() || !j.contains("step")) continue;  // header or metadata
        EnsembleRecord r;
        r.step = j["step"].get<std::int64_t>();
        r.accepted = j.value("accepted", false);
        if (j.contains("observables"))
            for (auto it = j["observables"].begin(); it != j["observables"].end(); ++it)
                r.observables.emplace_back(it.key(), it.value().get<double>());
        if (j.contains("assignment")) r.assignment = j["assignment"].get<std::vector<int>>();
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace mew
