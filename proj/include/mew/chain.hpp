#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mew/energy.hpp"
#include "mew/walk.hpp"

namespace mew {

enum class ChainMode { metropolis_composite, uniform_single_step };

struct ChainConfig {
    std::int64_t steps = 0;
    std::int64_t burn_in = 0;
    std::int64_t record_every = 1;
    std::uint64_t seed = 0;
    int d = 2;
    BalanceSpec balance;
    EnergySpec energy;
    ChainMode mode = ChainMode::metropolis_composite;
    double p_cycle = 0.5;  // single-step mode only
    bool record_assignments = false;
    int max_init_attempts = 10000;

    void validate() const;  // throws ConfigError
    nlohmann::ordered_json to_json() const;
};

struct EnsembleRecord {
    std::int64_t step = 0;
    bool accepted = false;
    std::vector<std::pair<std::string, double>> observables;
    std::optional<std::vector<int>> assignment;  // canonical labels
};

enum class RejectReason { none, balance, collision, zero_ratio, metropolis };

// per-step data captured for the replay harness: the accept decision must be
// a pure function of these three numbers
struct StepTrace {
    double log_target_ratio = 0.0;
    double transition_ratio = 1.0;
    double log_u = 0.0;  // quiet NaN when no coin was needed
    bool accepted = false;
    RejectReason reason = RejectReason::none;
};

struct ChainSummary {
    std::int64_t steps = 0;
    std::int64_t accepted = 0;
    std::int64_t balance_rejects = 0;
    std::int64_t collision_rejects = 0;
    std::int64_t zero_ratio_rejects = 0;
    std::int64_t metropolis_rejects = 0;
    double acceptance_rate = 0.0;
    std::uint64_t derived_seed = 0;
    double seconds = 0.0;
};

/*
 * One chain: owns its state, energy model, degeneracy cache and rng stream.
 * step() advances one MH step; rejections hold the current state and still
 * advance the step counter.
 */
class ChainRunner {
public:
    ChainRunner(const DualGraph& g, const ChainConfig& cfg, std::uint64_t derived_seed);

    RejectReason step();
    EnsembleRecord make_record(std::int64_t step_index) const;

    const MarkedTreeState& state() const { return state_; }
    const EnergyModel& energy() const { return energy_; }
    ChainSummary& summary() { return summary_; }
    const ChainSummary& summary() const { return summary_; }

    void set_trace_sink(std::vector<StepTrace>* sink) { trace_ = sink; }
    // test mode: recompute all tallies from scratch each step and compare
    void set_paranoid(bool on) { paranoid_ = on; }

    double current_log_degeneracy() const;

private:
    PartTallies tallies_after(const StateDelta& delta) const;
    PartTallies current_tallies() const;
    double log_degeneracy_after(const StateDelta& delta) const;

    const DualGraph* g_;
    ChainConfig cfg_;
    EnergyModel energy_;
    RngStream rng_;
    MarkedTreeState state_;
    DegeneracyCache cache_;
    ChainSummary summary_;

    int attr_dem_ = -1, attr_rep_ = -1, attr_aux_ = -1;
    double current_j_ = 0.0;
    std::vector<double> part_log_trees_;  // by stable label
    double parts_log_trees_sum_ = 0.0;
    double current_quotient_lnt_ = 0.0;

    std::vector<StepTrace>* trace_ = nullptr;
    bool paranoid_ = false;
};

struct ChainResult {
    std::vector<EnsembleRecord> records;
    ChainSummary summary;
};

// Deterministic given (graph, config): chain i runs on stream_seed(seed, 1+i).
ChainResult run_chain(const DualGraph& g, const ChainConfig& cfg);
std::vector<ChainResult> run_ensemble(const DualGraph& g, const ChainConfig& cfg,
                                      int chain_count, int threads = 0);

// JSON-lines ensemble output: one header line, then one record per line
void write_records_jsonl(std::ostream& out, const std::vector<EnsembleRecord>& records);
std::vector<EnsembleRecord> read_records_jsonl(std::istream& in);

}  // namespace mew
