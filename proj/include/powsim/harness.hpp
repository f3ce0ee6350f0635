#pragma once

#include "powsim/sim.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace powsim::harness {

struct ExpectedBand {
    std::string metric;
    double lower = -1e300;
    double upper = 1e300;
};

struct SweepSpec {
    std::string path;  // slash-separated path inside config, e.g. population/beta_adv
    std::vector<nlohmann::json> values;
};

struct ScenarioSpec {
    enum class Kind { Simulation, AnalyticCheck };

    std::string name;
    Kind kind = Kind::Simulation;
    SimConfig config;
    nlohmann::json raw_config;  // config subtree as parsed, for sweep patching
    long repetitions = 1;
    std::uint64_t seed_base = 1;
    std::optional<SweepSpec> sweep;
    std::optional<ExpectedBand> expected;
    std::vector<std::string> defaults_applied;
    std::string analytic_id;  // for Kind::AnalyticCheck
    std::string note;
};

/// Build a SimConfig from its JSON subtree, logging every defaulted field.
SimConfig config_from_json(const nlohmann::json& j, std::vector<std::string>& defaults);

ScenarioSpec parse_config_json(const nlohmann::json& j, const std::string& origin);

/// Load and validate a scenario file (JSON). Throws ParseError / ValidationError.
ScenarioSpec parse_config(const std::string& path);

/// Apply one sweep value to a spec (patches raw_config and re-derives config).
ScenarioSpec apply_sweep_value(const ScenarioSpec& spec, const nlohmann::json& value);

struct RunRecord {
    std::string scenario;
    std::uint64_t seed = 0;
    AttackOutcome outcome = AttackOutcome::NotAttempted;
    double payoff_hon = 0, payoff_rat = 0, payoff_adv = 0;
    long blocks_hon = 0, blocks_rat = 0, blocks_adv = 0;  // on the final chain
    double theta_final = 1.0;
    Round rounds = 0;
    double wall_ms = 0.0;
    ScenarioResult result;

    nlohmann::json to_json(bool include_wall = true) const;
    static RunRecord from_json(const nlohmann::json& j);
};

struct Aggregate {
    long reps = 0;
    long succeeded = 0, failed = 0, not_attempted = 0;
    double success_rate = 0, ci_low = 0, ci_high = 0;  // Wilson 95% on success
    double mean_payoff_hon = 0, mean_payoff_rat = 0, mean_payoff_adv = 0;
    double sd_payoff_hon = 0, sd_payoff_rat = 0, sd_payoff_adv = 0;
    long total_chain_blocks = 0;
    double adv_chain_share = 0;           // pooled over all reps
    double adv_share_ci_low = 0, adv_share_ci_high = 0;  // 95% CI over per-rep shares
    double rp_join_rate = 0;
    double theta_final_mean = 0;
    double poi_invalidation_rate = 0;

    double metric(const std::string& name) const;
    nlohmann::json to_json() const;
};

struct ScenarioRunResult {
    std::vector<RunRecord> records;
    Aggregate aggregate;
    bool has_verdict = false;
    bool pass = true;
    std::string verdict_detail;
};

/// Run all repetitions (parallel across seeds, seed_base + i for rep i) and
/// reduce. The aggregate is order-independent and identical for any worker
/// count.
ScenarioRunResult run_scenario(const ScenarioSpec& spec, int parallelism);

enum class EmitFormat { Csv, Jsonl };

void emit_csv(std::span<const RunRecord> records, std::ostream& out);
void emit_jsonl(std::span<const RunRecord> records, std::ostream& out);
void emit_results(std::span<const RunRecord> records, const std::string& path, EmitFormat fmt);
std::vector<RunRecord> read_jsonl(const std::string& path);

// ---------------------------------------------------------------------------
// Built-in scenario catalog

std::vector<std::string> catalog_names();
ScenarioSpec catalog_scenario(const std::string& name);
std::string catalog_description(const std::string& name);

/// Analytic catalog entries (reward-scheme horizon checks). Returns pass/fail
/// plus a detail object.
std::pair<bool, nlohmann::json> run_analytic_check(const std::string& id);

// ---------------------------------------------------------------------------
// Small Monte Carlo experiments used by the oracle verb and acceptance suite

struct PoiWindowStats {
    long windows = 0;
    long placed = 0;
    double frequency = 0;
    double exact = 0;
    double lower_bound = 0;
};

/// Claim-1 window experiment: in each window of k_th blocks, a commitment is
/// placed iff at least one block is honest.
PoiWindowStats poi_window_trial(std::uint64_t seed, double beta_hon, long k_th, long windows);

struct FilterRateStats {
    long trials = 0;
    long accepted = 0;
    double frequency = 0;
    double expected = 0;
    double sigma = 0;
};

/// Acceptance frequency of the tx-inclusion filter over random destinations.
FilterRateStats c1_filter_rate(std::uint64_t seed, int l, long trials);

} // namespace powsim::harness
