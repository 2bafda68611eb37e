/*
 * mew: sampling balanced connected graph partitions with the marked edge
 * walk. Subcommands cover chain runs, exact enumeration oracles, convergence
 * diagnostics, parameter sweeps, tree counting and the exponential-tilt toy
 * chain.
 */

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mew/chain.hpp"
#include "mew/diagnostics.hpp"
#include "mew/enumeration.hpp"
#include "mew/manifest.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFlags = 2;
constexpr int kExitInput = 3;
constexpr int kExitRuntime = 4;
constexpr int kExitWorkLimit = 5;

struct CliError : std::runtime_error {
    int code;
    CliError(int code_, std::string msg) : std::runtime_error(std::move(msg)), code(code_) {}
};

mew::DualGraph load_graph_or_throw(const std::string& path) {
    try {
        return mew::load_dual_graph_file(path);
    } catch (const mew::MewError& e) {
        throw CliError(kExitInput, std::string("graph: ") + e.what());
    }
}

mew::EnergySpec load_energy_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CliError(kExitInput, "cannot open energy spec: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
        return mew::EnergySpec::from_json(j);
    } catch (const std::exception& e) {
        throw CliError(kExitInput, std::string("energy spec: ") + e.what());
    }
}

mew::BalanceMode balance_mode_of(const std::string& name) {
    if (name == "population") return mew::BalanceMode::population;
    if (name == "node") return mew::BalanceMode::node;
    throw CliError(kExitFlags, "balance mode must be population or node");
}

std::string chain_output_path(const std::string& base, int chain, int chain_count) {
    if (chain_count == 1) return base;
    auto dot = base.rfind('.');
    auto slash = base.rfind('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return base + ".chain" + std::to_string(chain);
    return base.substr(0, dot) + ".chain" + std::to_string(chain) + base.substr(dot);
}

std::string records_to_string(const std::vector<mew::EnsembleRecord>& records) {
    std::ostringstream out;
    mew::write_records_jsonl(out, records);
    return out.str();
}

// shared flags of run-like commands
struct RunFlags {
    std::string graph_path, energy_path, out_path;
    int districts = 2;
    double epsilon = 0.0;
    std::int64_t steps = 0;
    std::uint64_t seed = 0;
    int chains = 1;
    std::int64_t burn_in = 0;
    std::int64_t record_every = 1;
    std::string mode = "composite";
    double p_cycle = 0.5;
    bool record_assignments = false;
    std::string balance_mode = "population";
    int threads = 0;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_out = true) {
    cmd->add_option("--graph", f.graph_path, "dual graph JSON")->required();
    cmd->add_option("--districts", f.districts, "number of districts d")->required();
    cmd->add_option("--epsilon", f.epsilon, "relative balance tolerance")->required();
    cmd->add_option("--steps", f.steps, "walk steps per chain")->required();
    cmd->add_option("--seed", f.seed, "master seed (required: runs are reproducible)")
        ->required();
    cmd->add_option("--energy", f.energy_path, "energy spec JSON")->required();
    if (with_out) cmd->add_option("--out", f.out_path, "ensemble JSONL output")->required();
    cmd->add_option("--chains", f.chains, "independent chains");
    cmd->add_option("--burn-in", f.burn_in, "steps discarded before recording");
    cmd->add_option("--record-every", f.record_every, "recording cadence in steps");
    cmd->add_option("--mode", f.mode, "composite | single")
        ->check(CLI::IsMember({"composite", "single"}));
    cmd->add_option("--p-cycle", f.p_cycle, "cycle step probability (single mode)");
    cmd->add_flag("--record-assignments", f.record_assignments, "store assignments per record");
    cmd->add_option("--balance-mode", f.balance_mode, "population | node")
        ->check(CLI::IsMember({"population", "node"}));
    cmd->add_option("--threads", f.threads, "worker threads (0 = hardware)");
}

mew::ChainConfig config_from_flags(const RunFlags& f) {
    mew::ChainConfig cfg;
    cfg.steps = f.steps;
    cfg.burn_in = f.burn_in;
    cfg.record_every = f.record_every;
    cfg.seed = f.seed;
    cfg.d = f.districts;
    cfg.balance.mode = balance_mode_of(f.balance_mode);
    cfg.balance.epsilon = f.epsilon;
    cfg.mode = f.mode == "single" ? mew::ChainMode::uniform_single_step
                                  : mew::ChainMode::metropolis_composite;
    cfg.p_cycle = f.p_cycle;
    cfg.record_assignments = f.record_assignments;
    return cfg;
}

int cmd_run(const RunFlags& f) {
    const auto t0 = std::chrono::steady_clock::now();
    mew::DualGraph g = load_graph_or_throw(f.graph_path);
    mew::ChainConfig cfg = config_from_flags(f);
    cfg.energy = load_energy_or_throw(f.energy_path);
    try {
        cfg.validate();
    } catch (const mew::ConfigError& e) {
        throw CliError(kExitFlags, e.what());
    }
    if (f.chains < 1) throw CliError(kExitFlags, "--chains must be at least 1");

    auto results = mew::run_ensemble(g, cfg, f.chains, f.threads);

    mew::RunManifest manifest;
    manifest.command = "run";
    manifest.config = cfg.to_json();
    manifest.config["chains"] = f.chains;
    manifest.config["graph"] = f.graph_path;
    manifest.config["energy_file"] = f.energy_path;
    manifest.config["out"] = f.out_path;
    {
        mew::EnergyModel model(g, cfg.energy, cfg.d, mew::stream_seed(cfg.seed, 0));
        if (model.needs_aux()) manifest.config["exp_transform_weights"] = model.aux_weights();
    }
    manifest.inputs.emplace_back(f.graph_path, mew::hex64(mew::fnv1a64_file(f.graph_path)));
    manifest.inputs.emplace_back(f.energy_path, mew::hex64(mew::fnv1a64_file(f.energy_path)));

    double total_accept = 0.0;
    std::int64_t total_steps = 0;
    for (int i = 0; i < f.chains; ++i) {
        const std::string path = chain_output_path(f.out_path, i, f.chains);
        mew::write_file_atomic(path, records_to_string(results[i].records));
        manifest.outputs.push_back(path);
        total_accept += static_cast<double>(results[i].summary.accepted);
        total_steps += results[i].summary.steps;
    }
    manifest.stats["acceptance_rate"] = total_accept / static_cast<double>(total_steps);
    manifest.stats["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest.stats["steps_per_second"] =
        static_cast<double>(total_steps) /
        std::max(1e-9, manifest.stats["wall_seconds"].get<double>());
    mew::write_manifest(manifest, f.out_path);

    std::cout << "wrote " << f.chains << " chain(s), acceptance rate "
              << total_accept / static_cast<double>(total_steps) << "\n";
    return kExitOk;
}

int cmd_enumerate(const std::string& graph_path, int districts, double epsilon,
                  const std::string& balance_mode, const std::string& out_path, bool lifted,
                  std::uint64_t work_limit) {
    mew::DualGraph g = load_graph_or_throw(graph_path);
    mew::BalanceSpec balance{balance_mode_of(balance_mode), epsilon};

    mew::RunManifest manifest;
    manifest.command = "enumerate";
    manifest.config = {{"graph", graph_path},
                       {"districts", districts},
                       {"epsilon", epsilon},
                       {"balance_mode", balance_mode},
                       {"lifted", lifted},
                       {"work_limit", work_limit},
                       {"out", out_path}};
    manifest.inputs.emplace_back(graph_path, mew::hex64(mew::fnv1a64_file(graph_path)));

    std::ostringstream body;
    nlohmann::ordered_json header;
    header["schema_version"] = 1;
    std::size_t count = 0;
    if (lifted) {
        auto states = mew::enumerate_lifted_states(g, districts, balance, work_limit);
        header["type"] = "mew_lifted_states";
        body << header.dump() << "\n";
        for (const auto& st : states) {
            nlohmann::ordered_json j;
            auto edge_pairs = [&](const std::vector<mew::EdgeId>& edges) {
                nlohmann::ordered_json arr = nlohmann::ordered_json::array();
                for (mew::EdgeId e : edges) {
                    auto [a, b] = g.endpoints(e);
                    arr.push_back({g.external_ids()[a], g.external_ids()[b]});
                }
                return arr;
            };
            j["tree"] = edge_pairs(st.tree);
            j["marked"] = edge_pairs(st.marked);
            body << j.dump() << "\n";
        }
        count = states.size();
        std::cout << count << " lifted states\n";
    } else {
        auto catalog = mew::enumerate_partitions(g, districts, balance, work_limit);
        header["type"] = "mew_partition_catalog";
        body << header.dump() << "\n";
        for (std::size_t i = 0; i < catalog.partitions.size(); ++i) {
            nlohmann::ordered_json j;
            j["assignment"] = catalog.partitions[i].assignment;
            j["log_weight"] = catalog.exact_log_weights[i];
            body << j.dump() << "\n";
        }
        count = catalog.partitions.size();
        std::cout << count << " balanced " << districts << "-partitions\n";
    }
    mew::write_file_atomic(out_path, body.str());
    manifest.outputs.push_back(out_path);
    manifest.stats["count"] = count;
    mew::write_manifest(manifest, out_path);
    return kExitOk;
}

std::vector<std::int64_t> parse_checkpoints(const std::string& spec, std::int64_t max_step) {
    std::vector<std::int64_t> cps;
    if (spec.rfind("log:", 0) == 0) {
        const int k = std::stoi(spec.substr(4));
        if (k < 1) throw CliError(kExitFlags, "log checkpoint count must be positive");
        for (int i = 1; i <= k; ++i) {
            double frac = std::pow(static_cast<double>(max_step),
                                   static_cast<double>(i) / static_cast<double>(k));
            std::int64_t cp = std::max<std::int64_t>(1, std::llround(frac));
            if (cps.empty() || cp > cps.back()) cps.push_back(cp);
        }
        if (cps.empty() || cps.back() != max_step) cps.push_back(max_step);
        return cps;
    }
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        cps.push_back(std::stoll(tok));
    }
    if (cps.empty()) throw CliError(kExitFlags, "empty checkpoint list");
    return cps;
}

int cmd_diagnose(const std::vector<std::string>& chain_paths, const std::string& observable,
                 const std::string& observable2, const std::string& target_path,
                 const std::string& target_energy_path, const std::string& graph_path,
                 const std::string& checkpoints_spec, int thin, const std::string& out_path) {
    if (chain_paths.size() < 2) throw CliError(kExitFlags, "--chains needs at least two files");

    std::vector<std::vector<mew::EnsembleRecord>> chains;
    for (const auto& path : chain_paths) {
        std::ifstream in(path);
        if (!in) throw CliError(kExitInput, "cannot open chain file: " + path);
        try {
            chains.push_back(mew::read_records_jsonl(in));
        } catch (const mew::MewError& e) {
            throw CliError(kExitInput, path + ": " + e.what());
        }
        if (chains.back().empty()) throw CliError(kExitInput, path + ": no records");
    }

    // observable presence: unknown everywhere -> flag error; partial -> input error
    auto has_observable = [](const std::vector<mew::EnsembleRecord>& records,
                             const std::string& name) {
        for (const auto& [n, v] : records.front().observables)
            if (n == name) return true;
        return false;
    };
    for (const std::string& name :
         observable2.empty() ? std::vector<std::string>{observable}
                             : std::vector<std::string>{observable, observable2}) {
        int present = 0;
        for (const auto& c : chains) present += has_observable(c, name);
        if (present == 0)
            throw CliError(kExitFlags, "unknown observable \"" + name + "\"");
        if (present != static_cast<int>(chains.size()))
            throw CliError(kExitInput,
                           "observable \"" + name + "\" missing from some chain files");
    }

    std::vector<mew::SampleSeries> series;
    std::int64_t max_common = std::numeric_limits<std::int64_t>::max();
    for (const auto& c : chains) {
        series.push_back(mew::series_from_records(c, observable, observable2));
        max_common = std::min(max_common, series.back().steps.back());
    }

    mew::KsReference reference;
    bool have_reference = false;
    if (!target_path.empty()) {
        if (!observable2.empty())
            throw CliError(kExitFlags, "distance-to-target is 1D only");
        std::ifstream in(target_path);
        if (!in) throw CliError(kExitInput, "cannot open target file: " + target_path);
        // a target is either a partition catalog (rows carry assignments but
        // no step) or another sample file (ordinary ensemble records)
        std::vector<std::vector<int>> catalog_rows;
        std::vector<mew::EnsembleRecord> target_records;
        {
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                nlohmann::json j;
                try {
                    j = nlohmann::json::parse(line);
                } catch (const nlohmann::json::exception& e) {
                    throw CliError(kExitInput, target_path + ": " + e.what());
                }
                if (!j.is_object()) continue;
                if (j.contains("step") && j.contains("observables")) {
                    mew::EnsembleRecord r;
                    r.step = j["step"].get<std::int64_t>();
                    for (auto it = j["observables"].begin(); it != j["observables"].end(); ++it)
                        r.observables.emplace_back(it.key(), it.value().get<double>());
                    target_records.push_back(std::move(r));
                } else if (j.contains("assignment")) {
                    catalog_rows.push_back(j["assignment"].get<std::vector<int>>());
                }
            }
        }
        if (catalog_rows.empty() && target_records.empty())
            throw CliError(kExitInput, "target file has no usable rows");
        const bool catalog_mode = !catalog_rows.empty();
        if (catalog_mode) {
            if (graph_path.empty())
                throw CliError(kExitFlags, "--graph is required with a catalog target");
            mew::DualGraph g = load_graph_or_throw(graph_path);
            mew::EnergySpec espec;
            if (!target_energy_path.empty()) espec = load_energy_or_throw(target_energy_path);
            else espec.terms.push_back({});  // constant_zero: uniform over the catalog
            int d = 0;
            for (int lbl : catalog_rows.front()) d = std::max(d, lbl + 1);
            mew::EnergyModel model(g, espec, d, 0);

            mew::PartitionCatalog catalog;
            for (auto& row : catalog_rows) {
                mew::Partition p{row, d};
                mew::validate_partition(g, p);
                catalog.partitions.push_back(mew::canonicalized(p));
                catalog.exact_log_weights.push_back(0.0);
            }
            auto probs = mew::exact_target_distribution(catalog, g, model);
            // discrete CDF of the observable under the exact law
            std::vector<std::pair<double, double>> atoms;
            for (std::size_t i = 0; i < catalog.partitions.size(); ++i) {
                const auto& p = catalog.partitions[i];
                double value = 0.0;
                if (observable == "cut_edges") value = mew::cut_edges(g, p);
                else if (observable == "mean_median") value = mew::mean_median(g, p);
                else if (observable.rfind("dem_share_", 0) == 0)
                    value = mew::dem_share(g, p, std::stoi(observable.substr(10)));
                else if (observable.rfind("exp_transform_", 0) == 0)
                    value = mew::exp_transform(g, p, espec.terms.front().lambda,
                                               std::stoi(observable.substr(14)),
                                               model.aux_weights());
                else
                    throw CliError(kExitFlags,
                                   "observable \"" + observable +
                                       "\" cannot be evaluated on a catalog target");
                atoms.emplace_back(value, probs[i]);
            }
            std::sort(atoms.begin(), atoms.end());
            reference.cdf = [atoms](double x) {
                double f = 0.0;
                for (const auto& [v, p] : atoms) {
                    if (v <= x) f += p;
                    else break;
                }
                return f;
            };
        } else {
            auto target_series = mew::series_from_records(target_records, observable);
            reference.samples = std::move(target_series.values);
        }
        have_reference = true;
    }

    auto checkpoints = parse_checkpoints(checkpoints_spec, max_common);
    mew::KsCurve curve;
    try {
        curve = mew::pairwise_curves(series, checkpoints, thin,
                                     have_reference ? &reference : nullptr,
                                     !observable2.empty());
    } catch (const mew::MewError& e) {
        throw CliError(kExitInput, e.what());
    }

    std::ostringstream csv;
    mew::write_ks_curve_csv(csv, curve);
    mew::write_file_atomic(out_path, csv.str());
    const std::string json_path = out_path + ".json";
    mew::write_file_atomic(json_path, mew::ks_curve_json(curve).dump(2) + "\n");

    mew::RunManifest manifest;
    manifest.command = "diagnose";
    manifest.config = {{"chains", chain_paths},
                       {"observable", observable},
                       {"observable2", observable2},
                       {"target", target_path},
                       {"target_energy", target_energy_path},
                       {"graph", graph_path},
                       {"checkpoints", checkpoints_spec},
                       {"thin", thin},
                       {"out", out_path}};
    for (const auto& path : chain_paths)
        manifest.inputs.emplace_back(path, mew::hex64(mew::fnv1a64_file(path)));
    manifest.outputs = {out_path, json_path};
    manifest.stats["final_pairwise_mean"] = curve.pairwise_mean.back();
    mew::write_manifest(manifest, out_path);

    std::cout << "final mean pairwise KS " << curve.pairwise_mean.back() << "\n";
    return kExitOk;
}

mew::SweepAxis parse_axis(const std::string& spec) {
    auto eq = spec.find('=');
    if (eq == std::string::npos)
        throw CliError(kExitFlags, "axis must look like beta:0=0.1,1,10");
    mew::SweepAxis axis;
    axis.param = spec.substr(0, eq);
    std::stringstream ss(spec.substr(eq + 1));
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) axis.values.push_back(std::stod(tok));
    if (axis.values.empty()) throw CliError(kExitFlags, "axis has no values");
    return axis;
}

int cmd_sweep(const RunFlags& f, const std::string& axis1_spec, const std::string& axis2_spec,
              const std::string& observable1, const std::string& observable2, int thin) {
    mew::DualGraph g = load_graph_or_throw(f.graph_path);
    mew::ChainConfig cfg = config_from_flags(f);
    cfg.energy = load_energy_or_throw(f.energy_path);
    try {
        cfg.validate();
    } catch (const mew::ConfigError& e) {
        throw CliError(kExitFlags, e.what());
    }
    mew::SweepAxis axis1 = parse_axis(axis1_spec), axis2 = parse_axis(axis2_spec);

    auto grid = mew::sweep(g, cfg, axis1, axis2, f.chains, observable1, observable2, thin,
                           f.threads);

    std::ostringstream csv;
    mew::write_sweep_csv(csv, grid);
    mew::write_file_atomic(f.out_path, csv.str());
    const std::string json_path = f.out_path + ".json";
    mew::write_file_atomic(json_path, mew::sweep_json(grid).dump(2) + "\n");

    mew::RunManifest manifest;
    manifest.command = "sweep";
    manifest.config = cfg.to_json();
    manifest.config["graph"] = f.graph_path;
    manifest.config["energy_file"] = f.energy_path;
    manifest.config["chains"] = f.chains;
    manifest.config["axis1"] = axis1_spec;
    manifest.config["axis2"] = axis2_spec;
    manifest.config["observable"] = observable1;
    manifest.config["observable2"] = observable2;
    manifest.config["thin"] = thin;
    manifest.config["out"] = f.out_path;
    manifest.inputs.emplace_back(f.graph_path, mew::hex64(mew::fnv1a64_file(f.graph_path)));
    manifest.inputs.emplace_back(f.energy_path, mew::hex64(mew::fnv1a64_file(f.energy_path)));
    manifest.outputs = {f.out_path, json_path};
    mew::write_manifest(manifest, f.out_path);
    std::cout << "swept " << grid.cells.size() << " cells\n";
    return kExitOk;
}

int cmd_tree_count(const std::string& graph_path, const std::string& assignment_path) {
    mew::DualGraph g = load_graph_or_throw(graph_path);
    std::ifstream in(assignment_path);
    if (!in) throw CliError(kExitInput, "cannot open assignment file: " + assignment_path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        throw CliError(kExitInput, std::string("assignment: ") + e.what());
    }
    if (!j.is_array() || static_cast<int>(j.size()) != g.vertex_count())
        throw CliError(kExitInput, "assignment must be a JSON array with one label per vertex");
    mew::Partition p;
    p.assignment = j.get<std::vector<int>>();
    int max_label = 0;
    for (int lbl : p.assignment) max_label = std::max(max_label, lbl);
    p.d = max_label + 1;
    p = mew::canonicalized(p);
    try {
        mew::validate_partition(g, p);
    } catch (const mew::MewError& e) {
        throw CliError(kExitInput, e.what());
    }

    const double ln10 = std::log(10.0);
    std::vector<std::vector<mew::VertexId>> parts(p.d);
    for (mew::VertexId v = 0; v < g.vertex_count(); ++v) parts[p.assignment[v]].push_back(v);
    double total = 0.0;
    for (int i = 0; i < p.d; ++i) {
        double lnt = mew::log_spanning_tree_count(g, parts[i]);
        total += lnt;
        std::cout << "part " << i << ": ln_t = " << lnt << "  log10_t = " << lnt / ln10 << "\n";
    }
    double lnq = mew::log_spanning_tree_count(mew::quotient_multigraph(g, p));
    total += lnq;
    std::cout << "quotient: ln_t = " << lnq << "  log10_t = " << lnq / ln10 << "\n";
    std::cout << "total: ln_tau = " << total << "  log10_tau = " << total / ln10 << "\n";
    return kExitOk;
}

int cmd_toy_tilt(double lambda, double beta, double mu, std::int64_t steps, std::uint64_t seed,
                 bool corrected) {
    auto r = mew::toy_tilt(lambda, beta, mu, steps, seed, corrected);
    std::cout << "sampled mean = " << r.mean << "  variance = " << r.variance << "\n";
    std::cout << "predicted (untruncated) mean = " << r.predicted_mean
              << "  variance = " << r.predicted_variance << "\n";
    std::cout << "exact stationary (truncated at 0) mean = " << r.exact_mean
              << "  variance = " << r.exact_variance << "\n";
    std::cout << "acceptance rate = "
              << static_cast<double>(r.accepted) / static_cast<double>(r.steps) << "\n";
    return kExitOk;
}

int cmd_baseline(const std::string& graph_path, double epsilon, const std::string& balance_mode,
                 std::int64_t samples, std::uint64_t seed, const std::string& out_path) {
    mew::DualGraph g = load_graph_or_throw(graph_path);
    mew::BalanceSpec balance{balance_mode_of(balance_mode), epsilon};
    mew::RngStream rng(mew::stream_seed(seed, 1));

    std::vector<mew::EnsembleRecord> records;
    records.reserve(samples);
    for (std::int64_t i = 1; i <= samples; ++i) {
        mew::Partition p = mew::recom2_baseline_sample(g, balance, rng);
        mew::EnsembleRecord r;
        r.step = i;
        r.accepted = true;
        r.observables.emplace_back("cut_edges", static_cast<double>(mew::cut_edges(g, p)));
        r.assignment = p.assignment;
        records.push_back(std::move(r));
    }
    mew::write_file_atomic(out_path, records_to_string(records));

    mew::RunManifest manifest;
    manifest.command = "baseline";
    manifest.config = {{"graph", graph_path},   {"epsilon", epsilon},
                       {"balance_mode", balance_mode}, {"samples", samples},
                       {"seed", seed},          {"out", out_path}};
    manifest.inputs.emplace_back(graph_path, mew::hex64(mew::fnv1a64_file(graph_path)));
    manifest.outputs = {out_path};
    mew::write_manifest(manifest, out_path);
    std::cout << samples << " baseline samples\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"marked edge walk sampler for balanced connected graph partitions"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "run MH chains and write ensemble JSONL");
    add_run_flags(run, run_flags);

    std::string en_graph, en_out, en_balance = "population";
    int en_d = 2;
    double en_eps = 0.0;
    bool en_lifted = false;
    std::uint64_t en_limit = 50'000'000;
    auto* enumerate = app.add_subcommand("enumerate", "enumerate balanced partitions exactly");
    enumerate->add_option("--graph", en_graph)->required();
    enumerate->add_option("--districts", en_d)->required();
    enumerate->add_option("--epsilon", en_eps)->required();
    enumerate->add_option("--out", en_out)->required();
    enumerate->add_flag("--lifted", en_lifted, "enumerate lifted (tree, marks) states");
    enumerate->add_option("--balance-mode", en_balance)
        ->check(CLI::IsMember({"population", "node"}));
    enumerate->add_option("--work-limit", en_limit, "search-node budget");

    std::vector<std::string> di_chains;
    std::string di_obs, di_obs2, di_target, di_target_energy, di_graph, di_cps = "log:12",
                                                                        di_out;
    int di_thin = 100;
    auto* diagnose = app.add_subcommand("diagnose", "pairwise/to-target KS decay curves");
    diagnose->add_option("--chains", di_chains, "chain record files")->required()->expected(-1);
    diagnose->add_option("--observable", di_obs)->required();
    diagnose->add_option("--observable2", di_obs2, "second observable (2D mode)");
    diagnose->add_option("--target", di_target, "reference samples or catalog JSONL");
    diagnose->add_option("--target-energy", di_target_energy, "energy for catalog weights");
    diagnose->add_option("--graph", di_graph, "graph (catalog targets only)");
    diagnose->add_option("--checkpoints", di_cps, "comma list or log:<count>");
    diagnose->add_option("--thin", di_thin, "use every thin-th record");
    diagnose->add_option("--out", di_out)->required();

    RunFlags sw_flags;
    std::string sw_axis1, sw_axis2, sw_obs = "cut_edges", sw_obs2;
    int sw_thin = 100;
    auto* sweep_cmd = app.add_subcommand("sweep", "pairwise-KS grid over energy parameters");
    add_run_flags(sweep_cmd, sw_flags);
    sweep_cmd->add_option("--axis1", sw_axis1, "e.g. center:0=60,64,68")->required();
    sweep_cmd->add_option("--axis2", sw_axis2)->required();
    sweep_cmd->add_option("--observable", sw_obs)->required();
    sweep_cmd->add_option("--observable2", sw_obs2)->required();
    sweep_cmd->add_option("--thin", sw_thin);

    std::string tc_graph, tc_assignment;
    auto* tree_count = app.add_subcommand("tree-count", "ln tau / log10 tau of an assignment");
    tree_count->add_option("--graph", tc_graph)->required();
    tree_count->add_option("--assignment", tc_assignment)->required();

    double tt_lambda = 1.0, tt_beta = 0.5, tt_mu = 2.0;
    std::int64_t tt_steps = 1000000;
    std::uint64_t tt_seed = 0;
    bool tt_corrected = false;
    auto* toy = app.add_subcommand("toy-tilt", "exponential-proposal tilt toy chain");
    toy->add_option("--lambda", tt_lambda)->required();
    toy->add_option("--beta", tt_beta)->required();
    toy->add_option("--mu", tt_mu)->required();
    toy->add_option("--steps", tt_steps);
    toy->add_option("--seed", tt_seed)->required();
    toy->add_flag("--corrected", tt_corrected, "include the Hastings proposal correction");

    std::string bl_graph, bl_out, bl_balance = "population";
    double bl_eps = 0.0;
    std::int64_t bl_samples = 1000;
    std::uint64_t bl_seed = 0;
    auto* baseline = app.add_subcommand("baseline", "independent d=2 spanning-tree samples");
    baseline->add_option("--graph", bl_graph)->required();
    baseline->add_option("--epsilon", bl_eps)->required();
    baseline->add_option("--samples", bl_samples)->required();
    baseline->add_option("--seed", bl_seed)->required();
    baseline->add_option("--out", bl_out)->required();
    baseline->add_option("--balance-mode", bl_balance)
        ->check(CLI::IsMember({"population", "node"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitFlags;
    }

    try {
        if (run->parsed()) return cmd_run(run_flags);
        if (enumerate->parsed())
            return cmd_enumerate(en_graph, en_d, en_eps, en_balance, en_out, en_lifted, en_limit);
        if (diagnose->parsed())
            return cmd_diagnose(di_chains, di_obs, di_obs2, di_target, di_target_energy,
                                di_graph, di_cps, di_thin, di_out);
        if (sweep_cmd->parsed())
            return cmd_sweep(sw_flags, sw_axis1, sw_axis2, sw_obs, sw_obs2, sw_thin);
        if (tree_count->parsed()) return cmd_tree_count(tc_graph, tc_assignment);
        if (toy->parsed())
            return cmd_toy_tilt(tt_lambda, tt_beta, tt_mu, tt_steps, tt_seed, tt_corrected);
        if (baseline->parsed())
            return cmd_baseline(bl_graph, bl_eps, bl_balance, bl_samples, bl_seed, bl_out);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code;
    } catch (const mew::WorkLimitError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitWorkLimit;
    } catch (const mew::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const mew::InitFailureError& e) {
        std::cerr << "error: initialization failed: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const mew::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitFlags;
}
