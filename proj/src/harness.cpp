#include "powsim/harness.hpp"

#include "powsim/analytics.hpp"
#include "powsim/pragthos.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

namespace powsim::harness {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config parsing

namespace {

template <typename T>
T take(const json& j, const char* key, T def, std::vector<std::string>& defaults,
       const std::string& scope) {
    if (j.contains(key)) return j.at(key).get<T>();
    std::ostringstream os;
    if constexpr (std::is_same_v<T, std::string>)
        os << scope << key << " = \"" << def << "\" (default)";
    else
        os << scope << key << " = " << def << " (default)";
    defaults.push_back(os.str());
    return def;
}

RewardFamily family_from_string(const std::string& s) {
    if (s == "constant") return RewardFamily::Constant;
    if (s == "geometric") return RewardFamily::Geometric;
    if (s == "harmonic") return RewardFamily::Harmonic;
    if (s == "custom") return RewardFamily::Custom;
    fail(Errc::ValidationError, "rewards.family: unknown family '" + s + "'");
}

AttackKind attack_from_string(const std::string& s) {
    if (s == "none") return AttackKind::None;
    if (s == "difficulty_altering") return AttackKind::DifficultyAltering;
    if (s == "quick_fork") return AttackKind::QuickFork;
    if (s == "selfish_mining_bribing") return AttackKind::SelfishMiningBribing;
    fail(Errc::ValidationError, "attack.kind: unknown kind '" + s + "'");
}

} // namespace

SimConfig config_from_json(const json& j, std::vector<std::string>& defaults) {
    SimConfig c;
    const json empty = json::object();

    const json& pop = j.contains("population") ? j.at("population") : empty;
    c.population.beta_hon = take(pop, "beta_hon", 1.0, defaults, "population.");
    c.population.beta_rat = take(pop, "beta_rat", 0.0, defaults, "population.");
    c.population.beta_adv = take(pop, "beta_adv", 0.0, defaults, "population.");
    c.population.n = take(pop, "n", 10, defaults, "population.");
    c.population.q = take(pop, "q", 64L, defaults, "population.");

    const json& ep = j.contains("epoch") ? j.at("epoch") : empty;
    c.epoch.lambda = take(ep, "lambda", 2016, defaults, "epoch.");
    c.epoch.tau_min = take(ep, "tau_min", 0.25, defaults, "epoch.");
    c.epoch.tau_max = take(ep, "tau_max", 4.0, defaults, "epoch.");
    c.epoch.target_block_interval = take(ep, "target_block_interval", 10.0, defaults, "epoch.");

    const json& rw = j.contains("rewards") ? j.at("rewards") : empty;
    c.rewards.family = family_from_string(
        take<std::string>(rw, "family", "constant", defaults, "rewards."));
    c.rewards.r0 = take(rw, "r0", 50.0, defaults, "rewards.");
    c.rewards.capital_lambda = take(rw, "phase_length", 210000L, defaults, "rewards.");
    c.rewards.vartheta = take(rw, "vartheta", 0.5, defaults, "rewards.");
    if (rw.contains("values")) c.rewards.values = rw.at("values").get<std::vector<double>>();

    const json& ex = j.contains("externality") ? j.at("externality") : empty;
    c.externality.e_fairness = take(ex, "e_fairness", 0.3, defaults, "externality.");
    c.externality.e_security = take(ex, "e_security", 0.01, defaults, "externality.");
    c.externality.rho = take(ex, "rho", 6, defaults, "externality.");
    c.externality.whale_fee_multiple =
        take(ex, "whale_fee_multiple", 10.0, defaults, "externality.");
    c.externality.fairness_window =
        take<Round>(ex, "fairness_window", -1, defaults, "externality.");
    c.externality.cr = take(ex, "cr", 1.0, defaults, "externality.");

    const json& costs = j.contains("costs") ? j.at("costs") : empty;
    c.cost_per_query = take(costs, "per_query", 0.0, defaults, "costs.");
    c.mining_cost_per_block = take(costs, "per_block", 0.0, defaults, "costs.");

    c.max_rounds = take<Round>(j, "max_rounds", 20000, defaults, "");
    const std::string net = take<std::string>(j, "network", "immediate", defaults, "");
    if (net == "immediate")
        c.network = NetworkMode::Immediate;
    else if (net == "front_running")
        c.network = NetworkMode::FrontRunning;
    else
        fail(Errc::ValidationError, "network: unknown mode '" + net + "'");

    const json& at = j.contains("attack") ? j.at("attack") : empty;
    c.attack.kind =
        attack_from_string(take<std::string>(at, "kind", "none", defaults, "attack."));
    c.attack.r1 = take(at, "r1", 0.0, defaults, "attack.");
    c.attack.r2 = take(at, "r2", 1.0, defaults, "attack.");
    c.attack.alpha = take(at, "alpha", 0.0, defaults, "attack.");
    c.attack.k = take(at, "k", 3, defaults, "attack.");
    c.attack.bribe = take(at, "bribe", 0.0, defaults, "attack.");
    c.attack.launch_height = take<Height>(at, "launch_height", 12, defaults, "attack.");
    c.attack.z = take(at, "z", 0.02, defaults, "attack.");

    const std::string rp =
        take<std::string>(j, "rational_tx_policy", "gossip", defaults, "");
    if (rp == "gossip")
        c.rational_tx_policy = RationalTxPolicy::Gossip;
    else if (rp == "withhold")
        c.rational_tx_policy = RationalTxPolicy::Withhold;
    else
        fail(Errc::ValidationError, "rational_tx_policy: unknown policy '" + rp + "'");

    const json& pr = j.contains("pragthos") ? j.at("pragthos") : empty;
    c.pragthos.pc_mod = take(pr, "pc_mod", false, defaults, "pragthos.");
    c.pragthos.tau_clamp = take(pr, "tau_clamp", false, defaults, "pragthos.");
    c.pragthos.tx_inclusion = take(pr, "tx_inclusion", false, defaults, "pragthos.");
    c.pragthos.mu = take(pr, "mu", 0.2, defaults, "pragthos.");
    c.pragthos.l = take(pr, "l", 8, defaults, "pragthos.");
    c.pragthos.divert_fraction = take(pr, "divert_fraction", 1.0, defaults, "pragthos.");

    c.smb_tie_break = take(j, "smb_tie_break", false, defaults, "");
    c.enforce_ahp_abstain = take(j, "enforce_ahp_abstain", false, defaults, "");
    c.initial_difficulty = take(j, "initial_difficulty", 1.0, defaults, "");
    c.stop_on_attack_end = take(j, "stop_on_attack_end", true, defaults, "");
    c.export_chain = take(j, "export_chain", false, defaults, "");
    c.export_path = take<std::string>(j, "export_path", "", defaults, "");
    c.rng_seed = take<std::uint64_t>(j, "seed", 1, defaults, "");

    if (j.contains("injected_txs")) {
        for (const auto& t : j.at("injected_txs")) {
            InjectedTx inj;
            inj.round = t.value("round", 1);
            inj.target = t.value("target", 0);
            inj.fee = t.value("fee", 1.0);
            inj.tag = t.value("tag", 0u);
            c.injected_txs.push_back(inj);
        }
    }

    const json& gf = j.contains("goldfinger") ? j.at("goldfinger") : empty;
    c.goldfinger.enabled = take(gf, "enabled", false, defaults, "goldfinger.");
    c.goldfinger.c1 = take(gf, "c1", 0.0, defaults, "goldfinger.");
    c.goldfinger.theta_init = take(gf, "theta_init", 1.0, defaults, "goldfinger.");

    c.validate();
    return c;
}

ScenarioSpec parse_config_json(const json& j, const std::string& origin) {
    ScenarioSpec spec;
    spec.name = j.value("name", origin);
    spec.repetitions = j.value("repetitions", 1L);
    spec.seed_base = j.value("seed_base", std::uint64_t{1});
    if (spec.repetitions < 1) fail(Errc::ValidationError, "repetitions must be >= 1");

    if (j.contains("expected")) {
        ExpectedBand band;
        band.metric = j.at("expected").value("metric", "success_rate");
        band.lower = j.at("expected").value("lower", -1e300);
        band.upper = j.at("expected").value("upper", 1e300);
        spec.expected = band;
    }
    if (j.contains("sweep")) {
        SweepSpec sw;
        sw.path = j.at("sweep").at("path").get<std::string>();
        for (const auto& v : j.at("sweep").at("values")) sw.values.push_back(v);
        if (sw.values.empty()) fail(Errc::ValidationError, "sweep.values is empty");
        spec.sweep = sw;
    }
    spec.raw_config = j.contains("config") ? j.at("config") : json::object();
    spec.config = config_from_json(spec.raw_config, spec.defaults_applied);
    return spec;
}

ScenarioSpec parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(Errc::IoError, "cannot open config file " + path);
    json j;
    try {
        j = json::parse(f);
    } catch (const json::parse_error& e) {
        fail(Errc::ParseError, path + ": " + e.what());
    }
    try {
        return parse_config_json(j, path);
    } catch (const json::exception& e) {
        fail(Errc::ValidationError, path + ": " + e.what());
    }
}

ScenarioSpec apply_sweep_value(const ScenarioSpec& spec, const json& value) {
    ScenarioSpec out = spec;
    out.sweep.reset();
    json patched = spec.raw_config;
    const std::string pointer = "/" + spec.sweep->path;
    patched[json::json_pointer(pointer)] = value;
    out.raw_config = patched;
    out.defaults_applied.clear();
    out.config = config_from_json(patched, out.defaults_applied);
    out.name = spec.name + "[" + spec.sweep->path + "=" + value.dump() + "]";
    return out;
}

// ---------------------------------------------------------------------------
// Records

json RunRecord::to_json(bool include_wall) const {
    json j;
    j["scenario"] = scenario;
    j["seed"] = seed;
    j["outcome"] = attack_outcome_name(outcome);
    j["payoff_hon"] = payoff_hon;
    j["payoff_rat"] = payoff_rat;
    j["payoff_adv"] = payoff_adv;
    j["blocks_hon"] = blocks_hon;
    j["blocks_rat"] = blocks_rat;
    j["blocks_adv"] = blocks_adv;
    j["theta_final"] = theta_final;
    j["rounds"] = rounds;
    if (include_wall) j["wall_ms"] = wall_ms;
    j["detail"] = result.to_json();
    return j;
}

RunRecord RunRecord::from_json(const json& j) {
    RunRecord r;
    r.scenario = j.at("scenario").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    const std::string o = j.at("outcome").get<std::string>();
    r.outcome = o == "succeeded" ? AttackOutcome::Succeeded
                : o == "failed"  ? AttackOutcome::Failed
                                 : AttackOutcome::NotAttempted;
    r.payoff_hon = j.at("payoff_hon").get<double>();
    r.payoff_rat = j.at("payoff_rat").get<double>();
    r.payoff_adv = j.at("payoff_adv").get<double>();
    r.blocks_hon = j.at("blocks_hon").get<long>();
    r.blocks_rat = j.at("blocks_rat").get<long>();
    r.blocks_adv = j.at("blocks_adv").get<long>();
    r.theta_final = j.at("theta_final").get<double>();
    r.rounds = j.at("rounds").get<Round>();
    r.wall_ms = j.value("wall_ms", 0.0);
    return r;
}

namespace {

RunRecord make_record(const std::string& scenario, ScenarioResult res, double wall_ms) {
    RunRecord r;
    r.scenario = scenario;
    r.seed = res.seed;
    r.outcome = res.attack_outcome;
    r.payoff_hon = res.party(Party::Honest).payoff_fiat;
    r.payoff_rat = res.party(Party::Rational).payoff_fiat;
    r.payoff_adv = res.party(Party::Adversarial).payoff_fiat;
    r.blocks_hon = res.party(Party::Honest).blocks_on_chain;
    r.blocks_rat = res.party(Party::Rational).blocks_on_chain;
    r.blocks_adv = res.party(Party::Adversarial).blocks_on_chain;
    r.theta_final = res.theta_final;
    r.rounds = res.rounds_run;
    r.wall_ms = wall_ms;
    r.result = std::move(res);
    return r;
}

std::pair<double, double> wilson_ci(long hits, long n) {
    if (n == 0) return {0.0, 1.0};
    const double z = 1.959963984540054;
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

} // namespace

double Aggregate::metric(const std::string& name) const {
    if (name == "success_rate") return success_rate;
    if (name == "adv_chain_share") return adv_chain_share;
    if (name == "adv_share_ci_low") return adv_share_ci_low;
    if (name == "adv_share_ci_high") return adv_share_ci_high;
    if (name == "mean_payoff_hon") return mean_payoff_hon;
    if (name == "mean_payoff_rat") return mean_payoff_rat;
    if (name == "mean_payoff_adv") return mean_payoff_adv;
    if (name == "rp_join_rate") return rp_join_rate;
    if (name == "theta_final_mean") return theta_final_mean;
    if (name == "poi_invalidation_rate") return poi_invalidation_rate;
    fail(Errc::ValidationError, "unknown metric '" + name + "'");
}

json Aggregate::to_json() const {
    json j;
    j["reps"] = reps;
    j["succeeded"] = succeeded;
    j["failed"] = failed;
    j["not_attempted"] = not_attempted;
    j["success_rate"] = success_rate;
    j["success_ci"] = {ci_low, ci_high};
    j["mean_payoff_hon"] = mean_payoff_hon;
    j["mean_payoff_rat"] = mean_payoff_rat;
    j["mean_payoff_adv"] = mean_payoff_adv;
    j["sd_payoff_hon"] = sd_payoff_hon;
    j["sd_payoff_rat"] = sd_payoff_rat;
    j["sd_payoff_adv"] = sd_payoff_adv;
    j["total_chain_blocks"] = total_chain_blocks;
    j["adv_chain_share"] = adv_chain_share;
    j["adv_share_ci"] = {adv_share_ci_low, adv_share_ci_high};
    j["rp_join_rate"] = rp_join_rate;
    j["theta_final_mean"] = theta_final_mean;
    j["poi_invalidation_rate"] = poi_invalidation_rate;
    return j;
}

ScenarioRunResult run_scenario(const ScenarioSpec& spec, int parallelism) {
    if (spec.kind == ScenarioSpec::Kind::AnalyticCheck) {
        auto [pass, detail] = run_analytic_check(spec.analytic_id);
        ScenarioRunResult out;
        out.has_verdict = true;
        out.pass = pass;
        out.verdict_detail = detail.dump();
        return out;
    }

    const long reps = spec.repetitions;
    std::vector<RunRecord> records(static_cast<std::size_t>(reps));
    std::atomic<long> next{0};
    auto worker = [&]() {
        for (;;) {
            const long i = next.fetch_add(1);
            if (i >= reps) break;
            SimConfig c = spec.config;
            c.rng_seed = spec.seed_base + static_cast<std::uint64_t>(i);
            const auto t0 = std::chrono::steady_clock::now();
            ScenarioResult res = run_simulation(c);
            const auto t1 = std::chrono::steady_clock::now();
            const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
            records[static_cast<std::size_t>(i)] = make_record(spec.name, std::move(res), ms);
        }
    };
    const int jobs = std::max(1, parallelism);
    if (jobs == 1 || reps == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    ScenarioRunResult out;
    Aggregate& a = out.aggregate;
    a.reps = reps;
    long adv_blocks = 0;
    double share_sum = 0, share_sq = 0;
    long share_n = 0;
    long rp_joins = 0, rp_total = 0;
    long poi_inv = 0;
    double h = 0, h2 = 0, r = 0, r2 = 0, adv = 0, adv2 = 0, th = 0;
    for (const auto& rec : records) {
        switch (rec.outcome) {
            case AttackOutcome::Succeeded: ++a.succeeded; break;
            case AttackOutcome::Failed: ++a.failed; break;
            case AttackOutcome::NotAttempted: ++a.not_attempted; break;
        }
        h += rec.payoff_hon;
        h2 += rec.payoff_hon * rec.payoff_hon;
        r += rec.payoff_rat;
        r2 += rec.payoff_rat * rec.payoff_rat;
        adv += rec.payoff_adv;
        adv2 += rec.payoff_adv * rec.payoff_adv;
        th += rec.theta_final;
        a.total_chain_blocks += rec.result.chain_blocks;
        adv_blocks += rec.blocks_adv;
        if (rec.result.chain_blocks > 0) {
            const double s = static_cast<double>(rec.blocks_adv) /
                             static_cast<double>(rec.result.chain_blocks);
            share_sum += s;
            share_sq += s * s;
            ++share_n;
        }
        for (const auto& d : rec.result.rp_decisions) {
            ++rp_total;
            if (d.joined) ++rp_joins;
        }
        if (rec.result.poi_invalidation) ++poi_inv;
    }
    const double n = static_cast<double>(reps);
    a.success_rate = static_cast<double>(a.succeeded) / n;
    std::tie(a.ci_low, a.ci_high) = wilson_ci(a.succeeded, reps);
    a.mean_payoff_hon = h / n;
    a.mean_payoff_rat = r / n;
    a.mean_payoff_adv = adv / n;
    a.sd_payoff_hon = std::sqrt(std::max(0.0, h2 / n - a.mean_payoff_hon * a.mean_payoff_hon));
    a.sd_payoff_rat = std::sqrt(std::max(0.0, r2 / n - a.mean_payoff_rat * a.mean_payoff_rat));
    a.sd_payoff_adv = std::sqrt(std::max(0.0, adv2 / n - a.mean_payoff_adv * a.mean_payoff_adv));
    a.theta_final_mean = th / n;
    if (a.total_chain_blocks > 0)
        a.adv_chain_share = static_cast<double>(adv_blocks) / a.total_chain_blocks;
    if (share_n > 1) {
        const double m = share_sum / share_n;
        const double var = std::max(0.0, share_sq / share_n - m * m) / (share_n - 1);
        const double half = 1.959963984540054 * std::sqrt(var);
        a.adv_share_ci_low = m - half;
        a.adv_share_ci_high = m + half;
    }
    a.rp_join_rate = rp_total > 0 ? static_cast<double>(rp_joins) / rp_total : 0.0;
    a.poi_invalidation_rate = static_cast<double>(poi_inv) / n;

    out.records = std::move(records);
    if (spec.expected) {
        out.has_verdict = true;
        const double v = a.metric(spec.expected->metric);
        out.pass = v >= spec.expected->lower && v <= spec.expected->upper;
        std::ostringstream os;
        os << spec.expected->metric << " = " << v << " expected in [" << spec.expected->lower
           << ", " << spec.expected->upper << "]";
        out.verdict_detail = os.str();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Emitters

namespace {

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

} // namespace

void emit_csv(std::span<const RunRecord> records, std::ostream& out) {
    out << "scenario,seed,outcome,payoff_hon,payoff_rat,payoff_adv,"
           "blocks_hon,blocks_rat,blocks_adv,theta_final,rounds,wall_ms\n";
    for (const auto& r : records) {
        out << csv_quote(r.scenario) << ',' << r.seed << ',' << attack_outcome_name(r.outcome)
            << ',' << r.payoff_hon << ',' << r.payoff_rat << ',' << r.payoff_adv << ','
            << r.blocks_hon << ',' << r.blocks_rat << ',' << r.blocks_adv << ','
            << r.theta_final << ',' << r.rounds << ',' << r.wall_ms << '\n';
    }
}

void emit_jsonl(std::span<const RunRecord> records, std::ostream& out) {
    for (const auto& r : records) {
        json j = r.to_json(true);
        j.erase("detail");  // flat record stream, same field names as CSV
        out << j.dump() << '\n';
    }
}

void emit_results(std::span<const RunRecord> records, const std::string& path, EmitFormat fmt) {
    std::ofstream f(path);
    if (!f) fail(Errc::IoError, "cannot open output file " + path);
    if (fmt == EmitFormat::Csv)
        emit_csv(records, f);
    else
        emit_jsonl(records, f);
    if (!f) fail(Errc::IoError, "write failed for " + path);
}

std::vector<RunRecord> read_jsonl(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(Errc::IoError, "cannot open " + path);
    std::vector<RunRecord> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        out.push_back(RunRecord::from_json(json::parse(line)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Catalog

namespace {

json daa_config(double beta_adv, double tau_min) {
    return json{
        {"population",
         {{"beta_hon", 1.0 - beta_adv}, {"beta_rat", 0.0}, {"beta_adv", beta_adv}, {"n", 100}, {"q", 64}}},
        {"epoch",
         {{"lambda", 200}, {"tau_min", tau_min}, {"tau_max", 4.0}, {"target_block_interval", 10.0}}},
        {"rewards", {{"family", "constant"}, {"r0", 50.0}, {"phase_length", 1000000000}}},
        {"externality", {{"e_fairness", 0.3}, {"e_security", 0.01}, {"rho", 6}}},
        {"costs", {{"per_query", 0.0}, {"per_block", 0.0}}},
        {"max_rounds", 30000},
        {"network", "immediate"},
        {"attack", {{"kind", "difficulty_altering"}, {"r1", 0.0}, {"r2", 1.0}, {"alpha", 0.0}}},
    };
}

json quickfork_config(int k, bool pc_mod) {
    json j{
        {"population",
         {{"beta_hon", 0.4}, {"beta_rat", 0.4}, {"beta_adv", 0.2}, {"n", 10}, {"q", 64}}},
        {"epoch",
         {{"lambda", 1000000}, {"tau_min", 0.25}, {"tau_max", 4.0}, {"target_block_interval", 20.0}}},
        {"rewards", {{"family", "constant"}, {"r0", 50.0}, {"phase_length", 1000000000}}},
        {"externality", {{"e_fairness", 0.3}, {"e_security", 0.01}, {"rho", 8}}},
        {"costs", {{"per_query", 0.0015625}, {"per_block", 20.0}}},
        {"max_rounds", 60000},
        {"network", "immediate"},
        {"attack", {{"kind", "quick_fork"}, {"k", k}, {"launch_height", 12}}},
    };
    if (pc_mod) j["pragthos"] = {{"pc_mod", true}, {"mu", 0.2}};
    return j;
}

json smb_config(double beta_hon, double beta_rat, double beta_adv, Round max_rounds) {
    return json{
        {"population",
         {{"beta_hon", beta_hon}, {"beta_rat", beta_rat}, {"beta_adv", beta_adv}, {"n", 20}, {"q", 64}}},
        {"epoch",
         {{"lambda", 1000000}, {"tau_min", 0.25}, {"tau_max", 4.0}, {"target_block_interval", 5.0}}},
        {"rewards", {{"family", "constant"}, {"r0", 50.0}, {"phase_length", 1000000000}}},
        {"externality", {{"e_fairness", 0.3}, {"e_security", 0.01}, {"rho", 50}}},
        {"costs", {{"per_query", 0.0}, {"per_block", 0.0}}},
        {"max_rounds", max_rounds},
        {"network", "immediate"},
        {"smb_tie_break", true},
        {"stop_on_attack_end", false},
        {"attack", {{"kind", "selfish_mining_bribing"}, {"z", 0.02}}},
    };
}

json txwithhold_config(const std::string& policy, bool filter, int l) {
    json j{
        {"population",
         {{"beta_hon", 0.875}, {"beta_rat", 0.125}, {"beta_adv", 0.0}, {"n", 8}, {"q", 64}}},
        {"epoch",
         {{"lambda", 1000000}, {"tau_min", 0.25}, {"tau_max", 4.0}, {"target_block_interval", 10.0}}},
        // transaction-fee-only regime: block reward pinned at zero
        {"rewards", {{"family", "constant"}, {"r0", 0.0}, {"phase_length", 1000000000}}},
        {"externality", {{"e_fairness", 0.3}, {"e_security", 0.01}, {"rho", 6}}},
        {"costs", {{"per_query", 0.0}, {"per_block", 0.0}}},
        {"max_rounds", 600},
        {"network", "immediate"},
        {"rational_tx_policy", policy},
        {"injected_txs", json::array({{{"round", 1}, {"target", 7}, {"fee", 1024.0}}})},
    };
    if (filter) j["pragthos"] = {{"tx_inclusion", true}, {"l", l}};
    return j;
}

struct CatalogEntry {
    const char* name;
    const char* description;
};

const CatalogEntry kCatalog[] = {
    {"daa-corr1",
     "difficulty-altering attack at beta_adv=0.46, tau_min=0.25 (expected to succeed)"},
    {"daa-corr2",
     "difficulty-altering attack at beta_adv=0.49 with the tau_min=1/2 clamp (expected to fail)"},
    {"quickfork-thm2", "quick fork at k <= k_limit with eta above the profitability bound"},
    {"smb-thm3", "selfish mining with bribing at (0.5, 0.25, 0.25)"},
    {"txwithhold-lemma1", "transaction withholding under the fee-only regime, inclusion filter on"},
    {"pcmod-thm4", "quick fork with the commit/reveal countermeasure enabled"},
    {"deflation-thm7", "analytic: deflationary payoff-gap sign pattern on a parameter grid"},
    {"horizon-thm8", "analytic: bounded-attack horizon floor inequalities on a parameter grid"},
};

} // namespace

std::vector<std::string> catalog_names() {
    std::vector<std::string> out;
    for (const auto& e : kCatalog) out.push_back(e.name);
    return out;
}

std::string catalog_description(const std::string& name) {
    for (const auto& e : kCatalog)
        if (name == e.name) return e.description;
    fail(Errc::ValidationError, "unknown catalog scenario '" + name + "'");
}

ScenarioSpec catalog_scenario(const std::string& name) {
    json j;
    if (name == "daa-corr1") {
        j = {{"name", name},
             {"repetitions", 200},
             {"seed_base", 1000},
             {"expected", {{"metric", "success_rate"}, {"lower", 0.90}, {"upper", 1.0}}},
             {"config", daa_config(0.46, 0.25)}};
    } else if (name == "daa-corr2") {
        j = {{"name", name},
             {"repetitions", 200},
             {"seed_base", 2000},
             {"expected", {{"metric", "success_rate"}, {"lower", 0.0}, {"upper", 0.05}}},
             {"config", daa_config(0.49, 0.5)}};
    } else if (name == "quickfork-thm2") {
        j = {{"name", name},
             {"repetitions", 10000},
             {"seed_base", 3000},
             {"expected", {{"metric", "success_rate"}, {"lower", 0.87}, {"upper", 1.0}}},
             {"config", quickfork_config(3, false)}};
    } else if (name == "smb-thm3") {
        j = {{"name", name},
             {"repetitions", 80},
             {"seed_base", 4000},
             {"expected", {{"metric", "adv_share_ci_low"}, {"lower", 0.2500000001}, {"upper", 1.0}}},
             {"config", smb_config(0.5, 0.25, 0.25, 9000)}};
    } else if (name == "txwithhold-lemma1") {
        j = {{"name", name},
             {"repetitions", 10000},
             {"seed_base", 5000},
             {"config", txwithhold_config("withhold", true, 8)}};
    } else if (name == "pcmod-thm4") {
        j = {{"name", name},
             {"repetitions", 200},
             {"seed_base", 6000},
             {"expected", {{"metric", "rp_join_rate"}, {"lower", 0.0}, {"upper", 0.0}}},
             {"config", quickfork_config(3, true)}};
    } else if (name == "deflation-thm7" || name == "horizon-thm8") {
        ScenarioSpec spec;
        spec.name = name;
        spec.kind = ScenarioSpec::Kind::AnalyticCheck;
        spec.analytic_id = name;
        return spec;
    } else {
        fail(Errc::ValidationError, "unknown catalog scenario '" + name + "'");
    }
    return parse_config_json(j, name);
}

// ---------------------------------------------------------------------------
// Analytic catalog checks

std::pair<bool, json> run_analytic_check(const std::string& id) {
    using namespace analytics;
    json detail;
    bool pass = true;
    const double p_grid[] = {0.05, 0.15, 0.25, 0.35, 0.45};
    const double d_grid[] = {0.02, 0.06, 0.11, 0.17};
    const double v_grid[] = {0.3, 0.45, 0.55, 0.7, 0.85};

    if (id == "deflation-thm7") {
        long points = 0, gap_ok = 0, ineq_ok = 0;
        for (double p : p_grid)
            for (double dd : d_grid)
                for (double v : v_grid) {
                    ++points;
                    const long ao = alpha_opt(p, dd, v);
                    const double ratio = dd / (p + dd);
                    const bool ineq = std::pow(v, static_cast<double>(ao)) < ratio &&
                                      ratio <= std::pow(v, static_cast<double>(ao - 1));
                    const double g_at = deflationary_payoff_gap(p, dd, v, 100.0, 50.0, 1.0, ao);
                    const double g_before =
                        deflationary_payoff_gap(p, dd, v, 100.0, 50.0, 1.0, ao - 1);
                    if (ineq) ++ineq_ok;
                    if (g_at >= 0.0 && g_before < 0.0) ++gap_ok;
                }
        pass = points == 100 && gap_ok == points && ineq_ok == points;
        detail = {{"points", points}, {"gap_sign_ok", gap_ok}, {"floor_inequality_ok", ineq_ok}};
    } else if (id == "horizon-thm8") {
        long points = 0, ineq_ok = 0, mono_ok = 0;
        for (double v : v_grid) {
            long prev = -1;
            for (double p : {0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
                ++points;
                const long at = alpha_th(p, v);
                const bool ineq = std::pow(v, static_cast<double>(at)) < (1.0 - p) &&
                                  (1.0 - p) <= std::pow(v, static_cast<double>(at - 1));
                if (ineq) ++ineq_ok;
                if (prev < 0 || at >= prev) ++mono_ok;  // non-decreasing in p_fr
                prev = at;
            }
        }
        pass = ineq_ok == points && mono_ok == points;
        detail = {{"points", points}, {"floor_inequality_ok", ineq_ok}, {"monotonicity_ok", mono_ok}};
    } else {
        fail(Errc::ValidationError, "unknown analytic check '" + id + "'");
    }
    return {pass, detail};
}

// ---------------------------------------------------------------------------
// Oracle-style experiments

PoiWindowStats poi_window_trial(std::uint64_t seed, double beta_hon, long k_th, long windows) {
    Rng rng(seed);
    PoiWindowStats st;
    st.windows = windows;
    for (long w = 0; w < windows; ++w) {
        bool placed = false;
        for (long i = 0; i < k_th; ++i)
            if (rng.bernoulli(beta_hon)) {
                placed = true;
                break;
            }
        if (placed) ++st.placed;
    }
    st.frequency = windows > 0 ? static_cast<double>(st.placed) / windows : 0.0;
    const auto p = pragthos::poi_inclusion_probability(beta_hon, k_th);
    st.exact = p.exact;
    st.lower_bound = p.lower_bound;
    return st;
}

FilterRateStats c1_filter_rate(std::uint64_t seed, int l, long trials) {
    Rng rng(seed);
    KeyedHasher hasher(seed);
    FilterRateStats st;
    st.trials = trials;
    Transaction tx = Transaction::normal(Digest256{}, 1.0, {1, 2, 3, 4});
    Digest256 parent;
    rng.fill_bytes(parent.bytes);
    const auto wire = tx.wire_bytes();
    std::array<std::uint8_t, 32> dest;
    for (long t = 0; t < trials; ++t) {
        rng.fill_bytes(dest);
        if (pragthos::c1_filter(hasher, std::span<const std::uint8_t>(wire),
                                std::span<const std::uint8_t>(dest.data(), dest.size()), parent, l))
            ++st.accepted;
    }
    st.frequency = trials > 0 ? static_cast<double>(st.accepted) / trials : 0.0;
    st.expected = std::pow(2.0, -static_cast<double>(l));
    st.sigma = std::sqrt(st.expected * (1.0 - st.expected) / static_cast<double>(trials));
    return st;
}

} // namespace powsim::harness
