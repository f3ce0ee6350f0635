#include "powsim/analytics.hpp"
#include "powsim/harness.hpp"
#include "powsim/pragthos.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace powsim;
using nlohmann::json;

int run_one_spec(harness::ScenarioSpec spec, std::uint64_t seed_override, long reps_override,
                 int jobs, const std::string& out_path, const std::string& format, bool quiet) {
    if (seed_override != 0) spec.seed_base = seed_override;
    if (reps_override > 0) spec.repetitions = reps_override;
    for (const auto& line : spec.defaults_applied) std::cerr << "[default] " << line << "\n";

    const auto res = harness::run_scenario(spec, jobs);
    if (spec.kind == harness::ScenarioSpec::Kind::AnalyticCheck) {
        std::cout << json{{"scenario", spec.name},
                          {"pass", res.pass},
                          {"detail", json::parse(res.verdict_detail)}}
                         .dump(2)
                  << "\n";
        return res.pass ? 0 : 1;
    }

    if (!out_path.empty()) {
        harness::emit_results(res.records, out_path,
                              format == "csv" ? harness::EmitFormat::Csv
                                              : harness::EmitFormat::Jsonl);
    }
    json summary;
    summary["scenario"] = spec.name;
    summary["repetitions"] = spec.repetitions;
    summary["seed_base"] = spec.seed_base;
    summary["aggregate"] = res.aggregate.to_json();
    if (res.has_verdict) {
        summary["verdict"] = res.pass ? "PASS" : "FAIL";
        summary["verdict_detail"] = res.verdict_detail;
    }
    if (!quiet) std::cout << summary.dump(2) << "\n";
    if (res.has_verdict && !res.pass) {
        std::cerr << "FAIL: " << spec.name << ": " << res.verdict_detail << "\n";
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"discrete-round proof-of-work attack simulator and bound calculator"};
    app.require_subcommand(1);

    // ---- bounds ----------------------------------------------------------
    auto* bounds = app.add_subcommand("bounds", "evaluate the closed-form security bounds");
    double tau_min = 0.25, beta_hon = 0.4, beta_rat = 0.4, beta_adv = 0.2;
    double eta = 2.5, vartheta = 1.0, mu = 0.2, p_fr = 0.3, delta_adv = 0.1, vtheta_defl = 0.5;
    double fee = 1024.0;
    int n_miners = 10, rho = 8, k_depth = 3, l_bits = 8;
    bounds->add_option("--tau-min", tau_min, "difficulty clamp floor");
    bounds->add_option("--beta-hon", beta_hon, "honest power fraction");
    bounds->add_option("--beta-rat", beta_rat, "rational power fraction");
    bounds->add_option("--beta-adv", beta_adv, "adversarial power fraction");
    bounds->add_option("--eta", eta, "reward/cost ratio r_block/chi1");
    bounds->add_option("--vartheta", vartheta, "next-phase reward ratio");
    bounds->add_option("--mu", mu, "threshold-gap failure tolerance");
    bounds->add_option("--p-fr", p_fr, "front-running acceptance probability");
    bounds->add_option("--delta", delta_adv, "attacker probability advantage");
    bounds->add_option("--vartheta-deflationary", vtheta_defl, "geometric reward ratio");
    bounds->add_option("--fee", fee, "withheld cumulative fee");
    bounds->add_option("-n,--miners", n_miners, "miner count");
    bounds->add_option("--rho", rho, "observer tolerance (blocks)");
    bounds->add_option("-k,--fork-depth", k_depth, "fork depth");
    bounds->add_option("-l,--filter-bits", l_bits, "tx-inclusion filter bits");

    // ---- simulate / sweep ------------------------------------------------
    auto* simulate = app.add_subcommand("simulate", "run one scenario");
    auto* sweep = app.add_subcommand("sweep", "run a scenario over a parameter grid");
    std::string config_path, scenario_name, out_path, format = "csv";
    std::uint64_t seed = 0;
    long reps = 0;
    int jobs = 1;
    bool quiet = false;
    std::string sweep_param;
    std::vector<double> sweep_values;
    for (auto* cmd : {simulate, sweep}) {
        cmd->add_option("--config", config_path, "scenario config file (JSON)")
            ->envname("POWSIM_CONFIG");
        cmd->add_option("--scenario", scenario_name, "built-in scenario name")
            ->envname("POWSIM_SCENARIO");
        cmd->add_option("--seed", seed, "seed base override")->envname("POWSIM_SEED");
        cmd->add_option("--reps", reps, "repetition count override")->envname("POWSIM_REPS");
        cmd->add_option("--jobs", jobs, "parallel workers")->envname("POWSIM_JOBS");
        cmd->add_option("--out", out_path, "write per-run records here")->envname("POWSIM_OUT");
        cmd->add_option("--format", format, "csv|jsonl")->envname("POWSIM_FORMAT");
        cmd->add_flag("--quiet", quiet, "suppress the summary json");
    }
    sweep->add_option("--param", sweep_param, "config path to sweep, e.g. population/beta_adv");
    sweep->add_option("--values", sweep_values, "sweep values");

    // ---- oracle ----------------------------------------------------------
    auto* oracle = app.add_subcommand("oracle", "run the brute-force oracles against the formulas");
    long oracle_trials = 100000;
    std::uint64_t oracle_seed = 42;
    oracle->add_option("--trials", oracle_trials, "Monte Carlo trials");
    oracle->add_option("--seed", oracle_seed, "oracle rng seed");

    // ---- catalog ---------------------------------------------------------
    auto* catalog = app.add_subcommand("catalog", "list the built-in scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*bounds) {
            json out;
            out["daa_beta_lower"] = analytics::daa_beta_lower(tau_min);
            const double alpha = std::max(1.0, beta_adv / tau_min);
            const auto taus = analytics::daa_tau_pair(0.0, alpha, beta_adv, tau_min);
            out["daa_tau_adv"] = taus.tau_adv;
            out["daa_tau_hon"] = taus.tau_hon;
            out["daa_feasible"] = analytics::daa_feasible(beta_adv, tau_min, 0.0, 1.0, alpha);
            if (beta_hon > 0.0 && beta_hon < 0.5) {
                const auto qf = analytics::qf_analyze(n_miners, beta_hon, beta_rat,
                                                      1.0 - beta_hon - beta_rat, eta, vartheta,
                                                      rho, k_depth);
                out["qf_eta"] = qf.eta;
                out["qf_eta_bound"] = qf.eta_bound;
                out["qf_phi"] = qf.phi;
                out["qf_varpi"] = qf.varpi;
                out["qf_k_limit"] = qf.k_limit;
                out["qf_m_min"] = qf.m_min;
                out["qf_success_prob"] = qf.success_prob;
                const auto kth = pragthos::k_th_compute(beta_hon, rho, mu);
                out["k_th"] = kth.exact;
                out["k_th_floor"] = kth.floored;
                const auto poi = pragthos::poi_inclusion_probability(beta_hon, kth.floored);
                out["poi_inclusion_exact"] = poi.exact;
                out["poi_inclusion_bound"] = poi.lower_bound;
            }
            out["smb_gamma"] = analytics::smb_gamma(beta_hon, beta_rat);
            out["smb_beta_lower"] = analytics::smb_beta_lower(beta_hon, beta_rat);
            out["alpha_th"] = analytics::alpha_th(p_fr, vtheta_defl);
            out["alpha_opt"] = analytics::alpha_opt(p_fr, delta_adv, vtheta_defl);
            out["epsilon_g_bound"] = analytics::epsilon_g_bound(fee, l_bits);
            std::cout << out.dump(2) << "\n";
            return 0;
        }

        if (*catalog) {
            for (const auto& name : harness::catalog_names())
                std::cout << name << "  -  " << harness::catalog_description(name) << "\n";
            return 0;
        }

        if (*oracle) {
            json out;
            bool ok = true;
            // gambler's ruin: DP oracle vs closed form over the grid
            double max_delta = 0.0;
            for (double phi : {0.1, 0.25, 0.4, 0.55, 0.7, 0.8, 0.9, 0.95})
                for (int rr = 2; rr <= 12; ++rr)
                    for (int kk = 0; kk <= rr; ++kk)
                        max_delta = std::max(
                            max_delta,
                            std::abs(analytics::gamblers_ruin_oracle(phi, rr, kk) -
                                     analytics::gamblers_ruin_closed_form(phi, rr, kk)));
            out["gamblers_ruin_max_abs_delta"] = max_delta;
            ok = ok && max_delta < 1e-9;
            {
                Rng rng(oracle_seed);
                const double mc =
                    analytics::gamblers_ruin_monte_carlo(rng, 0.8, 6, 2, oracle_trials);
                out["gamblers_ruin_mc"] = mc;
                out["gamblers_ruin_closed_form"] = analytics::gamblers_ruin_closed_form(0.8, 6, 2);
                ok = ok && std::abs(mc - 0.8002) < 0.01;
            }
            {
                const auto fr = harness::c1_filter_rate(oracle_seed, 8, 1 << 16);
                out["c1_rate"] = fr.frequency;
                out["c1_expected"] = fr.expected;
                ok = ok && std::abs(fr.frequency - fr.expected) <= 3.0 * fr.sigma;
            }
            {
                const auto pw = harness::poi_window_trial(oracle_seed, 0.4, 4, oracle_trials);
                out["poi_window_frequency"] = pw.frequency;
                out["poi_window_exact"] = pw.exact;
                ok = ok && std::abs(pw.frequency - pw.exact) < 0.02;
            }
            {
                std::vector<double> fees(10, 1.0);
                const auto tw = analytics::tw_utilities(fees, 0, 0.9, 0.01, 10, 20000);
                const double closed = 10.0 * analytics::tw_geometric_closed_form(0.9, 0.01, 10);
                out["tw_series"] = tw.u_follow;
                out["tw_closed_form"] = closed;
                ok = ok && std::abs(tw.u_follow - closed) < 1e-9;
            }
            out["pass"] = ok;
            std::cout << out.dump(2) << "\n";
            return ok ? 0 : 1;
        }

        if (*simulate || *sweep) {
            harness::ScenarioSpec spec;
            if (!scenario_name.empty())
                spec = harness::catalog_scenario(scenario_name);
            else if (!config_path.empty())
                spec = harness::parse_config(config_path);
            else {
                std::cerr << "need --scenario or --config\n";
                return 2;
            }

            if (*sweep) {
                if (!sweep_param.empty()) {
                    harness::SweepSpec sw;
                    sw.path = sweep_param;
                    for (double v : sweep_values) sw.values.push_back(v);
                    spec.sweep = sw;
                }
                if (!spec.sweep)
                    fail(Errc::ValidationError, "sweep requires a sweep spec or --param/--values");
                int rc = 0;
                std::vector<harness::RunRecord> all;
                for (const auto& v : spec.sweep->values) {
                    auto point = harness::apply_sweep_value(spec, v);
                    if (seed != 0) point.seed_base = seed;
                    if (reps > 0) point.repetitions = reps;
                    auto res = harness::run_scenario(point, jobs);
                    json summary{{"scenario", point.name},
                                 {"aggregate", res.aggregate.to_json()}};
                    if (res.has_verdict) {
                        summary["verdict"] = res.pass ? "PASS" : "FAIL";
                        summary["verdict_detail"] = res.verdict_detail;
                        if (!res.pass) rc = 1;
                    }
                    if (!quiet) std::cout << summary.dump(2) << "\n";
                    all.insert(all.end(), std::make_move_iterator(res.records.begin()),
                               std::make_move_iterator(res.records.end()));
                }
                if (!out_path.empty())
                    harness::emit_results(all, out_path,
                                          format == "csv" ? harness::EmitFormat::Csv
                                                          : harness::EmitFormat::Jsonl);
                return rc;
            }
            return run_one_spec(spec, seed, reps, jobs, out_path, format, quiet);
        }
    } catch (const powsim::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
