#include "powsim/analytics.hpp"
#include "powsim/harness.hpp"
#include "powsim/pragthos.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

namespace py = pybind11;
using namespace powsim;
using nlohmann::json;

namespace {

// json <-> python object bridging keeps the binding surface small: configs
// come in as dicts, results go out as dicts.
py::object json_to_py(const json& j) {
    switch (j.type()) {
        case json::value_t::null: return py::none();
        case json::value_t::boolean: return py::bool_(j.get<bool>());
        case json::value_t::number_integer: return py::int_(j.get<long long>());
        case json::value_t::number_unsigned: return py::int_(j.get<unsigned long long>());
        case json::value_t::number_float: return py::float_(j.get<double>());
        case json::value_t::string: return py::str(j.get<std::string>());
        case json::value_t::array: {
            py::list out;
            for (const auto& v : j) out.append(json_to_py(v));
            return out;
        }
        case json::value_t::object: {
            py::dict out;
            for (auto it = j.begin(); it != j.end(); ++it)
                out[py::str(it.key())] = json_to_py(it.value());
            return out;
        }
        default: return py::none();
    }
}

json py_to_json(const py::handle& h) {
    if (h.is_none()) return nullptr;
    if (py::isinstance<py::bool_>(h)) return h.cast<bool>();
    if (py::isinstance<py::int_>(h)) return h.cast<long long>();
    if (py::isinstance<py::float_>(h)) return h.cast<double>();
    if (py::isinstance<py::str>(h)) return h.cast<std::string>();
    if (py::isinstance<py::dict>(h)) {
        json out = json::object();
        for (auto item : h.cast<py::dict>())
            out[item.first.cast<std::string>()] = py_to_json(item.second);
        return out;
    }
    if (py::isinstance<py::list>(h) || py::isinstance<py::tuple>(h)) {
        json out = json::array();
        for (auto item : h.cast<py::sequence>()) out.push_back(py_to_json(item));
        return out;
    }
    throw py::type_error("unsupported config value");
}

py::dict run_scenario_py(const py::dict& scenario, int jobs) {
    const json j = py_to_json(scenario);
    auto spec = harness::parse_config_json(j, "inline");
    auto res = harness::run_scenario(spec, jobs);
    json out;
    out["aggregate"] = res.aggregate.to_json();
    json recs = json::array();
    for (const auto& r : res.records) recs.push_back(r.to_json(false));
    out["records"] = recs;
    if (res.has_verdict) {
        out["pass"] = res.pass;
        out["verdict_detail"] = res.verdict_detail;
    }
    return json_to_py(out).cast<py::dict>();
}

py::dict run_catalog_py(const std::string& name, int jobs, long reps_override,
                        std::uint64_t seed_override) {
    auto spec = harness::catalog_scenario(name);
    if (reps_override > 0) spec.repetitions = reps_override;
    if (seed_override != 0) spec.seed_base = seed_override;
    auto res = harness::run_scenario(spec, jobs);
    json out;
    if (spec.kind == harness::ScenarioSpec::Kind::AnalyticCheck) {
        out["pass"] = res.pass;
        out["detail"] = json::parse(res.verdict_detail);
    } else {
        out["aggregate"] = res.aggregate.to_json();
        if (res.has_verdict) {
            out["pass"] = res.pass;
            out["verdict_detail"] = res.verdict_detail;
        }
    }
    return json_to_py(out).cast<py::dict>();
}

py::dict run_simulation_py(const py::dict& config) {
    std::vector<std::string> defaults;
    SimConfig cfg = harness::config_from_json(py_to_json(config), defaults);
    auto res = run_simulation(cfg);
    json out = res.to_json();
    out["defaults_applied"] = defaults;
    return json_to_py(out).cast<py::dict>();
}

} // namespace

PYBIND11_MODULE(_powsim, m) {
    m.doc() = "discrete-round proof-of-work attack simulator and closed-form bound calculator";

    auto an = m.def_submodule("analytics", "closed-form security bounds");
    an.def("daa_beta_lower", &analytics::daa_beta_lower, py::arg("tau_min"));
    an.def(
        "daa_tau_pair",
        [](double r1, double alpha, double beta_a, double tau_min) {
            const auto t = analytics::daa_tau_pair(r1, alpha, beta_a, tau_min);
            return py::make_tuple(t.tau_adv, t.tau_hon);
        },
        py::arg("r1"), py::arg("alpha"), py::arg("beta_a"), py::arg("tau_min"));
    an.def("daa_feasible", &analytics::daa_feasible, py::arg("beta_a"), py::arg("tau_min"),
           py::arg("r1"), py::arg("r2"), py::arg("alpha"));
    an.def(
        "qf_analyze",
        [](int n, double bh, double br, double ba, double eta, double vt, int rho, int k) {
            const auto a = analytics::qf_analyze(n, bh, br, ba, eta, vt, rho, k);
            py::dict d;
            d["eta"] = a.eta;
            d["eta_bound"] = a.eta_bound;
            d["phi"] = a.phi;
            d["varpi"] = a.varpi;
            d["k_limit"] = a.k_limit;
            d["m_min"] = a.m_min;
            d["success_prob"] = a.success_prob;
            return d;
        },
        py::arg("n"), py::arg("beta_hon"), py::arg("beta_rat"), py::arg("beta_adv"),
        py::arg("eta"), py::arg("vartheta"), py::arg("rho"), py::arg("k"));
    an.def(
        "qf_deviation_payoff",
        [](int n, double bh, double bp, double r, double chi1, double vt, long k, long mm) {
            const auto p = analytics::qf_deviation_payoff(n, bh, bp, r, chi1, vt, k, mm);
            return py::make_tuple(p.v_deviate, p.v_follow);
        },
        py::arg("n"), py::arg("beta_hon"), py::arg("beta_par"), py::arg("r_block"),
        py::arg("chi1"), py::arg("vartheta"), py::arg("k"), py::arg("m"));
    an.def("gamblers_ruin_closed_form", &analytics::gamblers_ruin_closed_form, py::arg("phi"),
           py::arg("rho"), py::arg("k"));
    an.def("gamblers_ruin_oracle", &analytics::gamblers_ruin_oracle, py::arg("phi"),
           py::arg("rho"), py::arg("k"));
    an.def(
        "gamblers_ruin_monte_carlo",
        [](double phi, int rho, int k, long trials, std::uint64_t seed) {
            Rng rng(seed);
            return analytics::gamblers_ruin_monte_carlo(rng, phi, rho, k, trials);
        },
        py::arg("phi"), py::arg("rho"), py::arg("k"), py::arg("trials") = 100000,
        py::arg("seed") = 42);
    an.def("smb_gamma", &analytics::smb_gamma, py::arg("beta_h"), py::arg("beta_r"));
    an.def("smb_beta_lower", &analytics::smb_beta_lower, py::arg("beta_h"), py::arg("beta_r"));
    an.def(
        "tw_utilities",
        [](const std::vector<double>& fees, int own, double delta, double p_su, int n,
           long horizon) {
            const auto u = analytics::tw_utilities(fees, own, delta, p_su, n, horizon);
            return py::make_tuple(u.u_follow, u.u_withhold);
        },
        py::arg("fees"), py::arg("own_index"), py::arg("delta"), py::arg("p_su"), py::arg("n"),
        py::arg("horizon") = 20000);
    an.def("epsilon_g_bound", &analytics::epsilon_g_bound, py::arg("total_withheld_fee"),
           py::arg("l"));
    an.def("alpha_th", &analytics::alpha_th, py::arg("p_fr"), py::arg("vartheta"));
    an.def("alpha_opt", &analytics::alpha_opt, py::arg("p_fr"), py::arg("delta_adv"),
           py::arg("vartheta"));
    an.def("deflationary_payoff_gap", &analytics::deflationary_payoff_gap, py::arg("p_fr"),
           py::arg("delta_adv"), py::arg("vartheta"), py::arg("capital_lambda"),
           py::arg("r_block"), py::arg("theta"), py::arg("alpha2"));
    an.def("ahp_check", &analytics::ahp_check, py::arg("theta"), py::arg("r_block"),
           py::arg("p_h"), py::arg("chi"));
    an.def("goldfinger_value", &analytics::goldfinger_value, py::arg("theta_init"),
           py::arg("theta_now"), py::arg("c1"), py::arg("coin_payoff"));

    auto pt = m.def_submodule("pragthos", "countermeasure primitives");
    pt.def(
        "k_th_compute",
        [](double beta_hon, int rho, double mu) {
            const auto k = pragthos::k_th_compute(beta_hon, rho, mu);
            return py::make_tuple(k.exact, k.floored);
        },
        py::arg("beta_hon"), py::arg("rho"), py::arg("mu"));
    pt.def(
        "poi_inclusion_probability",
        [](double beta_hon, long k_th) {
            const auto p = pragthos::poi_inclusion_probability(beta_hon, k_th);
            return py::make_tuple(p.exact, p.lower_bound);
        },
        py::arg("beta_hon"), py::arg("k_th"));

    m.def("run_simulation", &run_simulation_py, py::arg("config"),
          "run one seeded simulation from a config dict; returns the full result record");
    m.def("run_scenario", &run_scenario_py, py::arg("scenario"), py::arg("jobs") = 1,
          "run a scenario spec dict (repetitions, seed_base, expected band)");
    m.def("run_catalog", &run_catalog_py, py::arg("name"), py::arg("jobs") = 1,
          py::arg("reps") = 0, py::arg("seed") = 0, "run a built-in scenario by name");
    m.def("catalog_names", &harness::catalog_names);
    m.def(
        "poi_window_trial",
        [](std::uint64_t seed, double beta_hon, long k_th, long windows) {
            const auto st = harness::poi_window_trial(seed, beta_hon, k_th, windows);
            py::dict d;
            d["windows"] = st.windows;
            d["placed"] = st.placed;
            d["frequency"] = st.frequency;
            d["exact"] = st.exact;
            d["lower_bound"] = st.lower_bound;
            return d;
        },
        py::arg("seed"), py::arg("beta_hon"), py::arg("k_th"), py::arg("windows"));
    m.def(
        "c1_filter_rate",
        [](std::uint64_t seed, int l, long trials) {
            const auto st = harness::c1_filter_rate(seed, l, trials);
            py::dict d;
            d["trials"] = st.trials;
            d["accepted"] = st.accepted;
            d["frequency"] = st.frequency;
            d["expected"] = st.expected;
            d["sigma"] = st.sigma;
            return d;
        },
        py::arg("seed"), py::arg("l"), py::arg("trials"));
}
