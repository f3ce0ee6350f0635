#include "powsim/analytics.hpp"

#include <algorithm>
#include <cmath>

namespace powsim::analytics {

// ---------------------------------------------------------------------------
// Difficulty-altering attack

double daa_beta_lower(double tau_min) {
    if (!(tau_min > 0.0)) fail(Errc::DegenerateInput, "tau_min must be positive");
    const double s = 3.0 + tau_min;
    return (s - std::sqrt(s * s - 4.0 * (tau_min + 1.0))) / 2.0;
}

TauPair daa_tau_pair(double r1, double alpha, double beta_a, double tau_min) {
    if (!(r1 >= 0.0 && r1 <= 1.0)) fail(Errc::DegenerateInput, "r1 in [0,1]");
    if (!(beta_a > 0.0 && beta_a < 1.0)) fail(Errc::DegenerateInput, "beta_a in (0,1)");
    const double tau_adv = std::max(1.0 / (r1 + alpha * (1.0 - r1) / beta_a), tau_min);
    const double tau_hon = std::max(1.0 / (r1 + (1.0 - r1) / (1.0 - beta_a)), tau_min);
    return {tau_adv, tau_hon};
}

bool daa_feasible(double beta_a, double tau_min, double r1, double r2, double alpha) {
    const auto [tau_adv, tau_hon] = daa_tau_pair(r1, alpha, beta_a, tau_min);
    // Time for the honest branch to finish (1-r1) of e_i plus r2 of e_{i+1}
    // must strictly exceed the private branch's, with T normalized to 1.
    const double lhs = tau_hon * r2 / (1.0 - beta_a) + (1.0 - r1) / (1.0 - beta_a);
    const double rhs = (1.0 - r1) / beta_a + r2 * tau_adv / beta_a;
    return lhs > rhs;
}

DaaAnalysis daa_analyze(double beta_a, double tau_min, double r1, double r2, double alpha,
                        double theta_scale, double epsilon) {
    DaaAnalysis a;
    a.beta_lower = daa_beta_lower(tau_min);
    const auto taus = daa_tau_pair(r1, alpha, beta_a, tau_min);
    a.tau_adv = taus.tau_adv;
    a.tau_hon = taus.tau_hon;
    a.feasible = daa_feasible(beta_a, tau_min, r1, r2, alpha);
    a.concentration.theta_scale = theta_scale;
    a.concentration.epsilon = epsilon;
    a.concentration.tail_bound = std::exp(-theta_scale * epsilon * epsilon / 3.0);
    return a;
}

// ---------------------------------------------------------------------------
// Quick fork

QfAnalysis qf_analyze(int n, double beta_hon, double beta_rat, double beta_adv, double eta,
                      double vartheta, int rho, int k) {
    if (n < 2) fail(Errc::NMinersTooSmall, "need n >= 2");
    if (!(beta_hon > 0.0 && beta_hon < 0.5))
        fail(Errc::DegenerateBetaHon, "need 0 < beta_hon < 1/2 for an overtake to exist");
    QfAnalysis a;
    a.eta = eta;
    a.phi = beta_hon / (beta_rat + beta_adv);
    const double nn = static_cast<double>(n);
    // General (vartheta-aware) profitability bound; reduces to
    // (n - beta_hon n - 1)/(n beta_hon - 1) at vartheta = 1.
    a.eta_bound = (1.0 - beta_hon) / (nn * beta_hon - 1.0) * (nn - beta_hon * nn - 1.0) /
                  (1.0 - (2.0 - vartheta) * beta_hon);
    a.varpi = std::log((1.0 + (nn - 1.0) * std::pow(a.phi, rho)) / nn) / std::log(a.phi);
    a.k_limit = static_cast<long>(std::floor(static_cast<double>(rho) - a.varpi));
    a.m_min = static_cast<long>(std::ceil(static_cast<double>(k) * beta_hon / (1.0 - 2.0 * beta_hon)));
    a.success_prob = gamblers_ruin_closed_form(a.phi, rho, k);
    return a;
}

QfPayoffs qf_deviation_payoff(int n, double beta_hon, double beta_par, double r_block, double chi1,
                              double vartheta, long k, long m) {
    if (n < 2) fail(Errc::NMinersTooSmall, "need n >= 2");
    if (!(beta_hon > 0.0 && beta_hon < 0.5)) fail(Errc::DegenerateBetaHon, "need 0 < beta_hon < 1/2");
    const double nn = static_cast<double>(n);
    const double kk = static_cast<double>(k);
    const double mm = static_cast<double>(m);
    const double gross = r_block * (kk + mm * vartheta) - chi1 * (kk + mm);
    QfPayoffs p;
    p.v_deviate =
        (nn - 1.0) / nn * (beta_par / (1.0 - beta_hon)) * gross - kk * beta_par * chi1;
    p.v_follow = beta_par * gross;
    return p;
}

QfPayoffs qf_deviation_payoff_pcmod(int n, double beta_hon, double beta_par, double r_block,
                                    double chi1, double vartheta, long k, long m) {
    if (n < 2) fail(Errc::NMinersTooSmall, "need n >= 2");
    if (!(beta_hon > 0.0 && beta_hon < 0.5)) fail(Errc::DegenerateBetaHon, "need 0 < beta_hon < 1/2");
    const double nn = static_cast<double>(n);
    const double kk = static_cast<double>(k);
    const double mm = static_cast<double>(m);
    const double gross = r_block * (kk + mm * vartheta) - chi1 * (kk + mm);
    // With commitments in force every party mines the fork, so the deviator's
    // share is its plain beta_par and it still eats the orphaned-chain cost.
    QfPayoffs p;
    p.v_deviate = (nn - 1.0) / nn * beta_par * gross - kk * beta_par * chi1;
    p.v_follow = beta_par * gross;
    return p;
}

double gamblers_ruin_closed_form(double phi, int rho, int k) {
    if (!(phi > 0.0)) fail(Errc::DegenerateInput, "phi must be positive");
    if (k < 0 || k > rho) fail(Errc::DegenerateInput, "need 0 <= k <= rho");
    if (k == 0) return 1.0;
    if (k == rho) return 0.0;
    if (std::abs(phi - 1.0) < 1e-15)
        return static_cast<double>(rho - k) / static_cast<double>(rho);
    return (1.0 - std::pow(phi, rho - k)) / (1.0 - std::pow(phi, rho));
}

double gamblers_ruin_oracle(double phi, int rho, int k) {
    if (!(phi > 0.0)) fail(Errc::DegenerateInput, "phi must be positive");
    if (k < 0 || k > rho) fail(Errc::DegenerateInput, "need 0 <= k <= rho");
    // P(absorb at 0 | start i): p[0] = 1, p[rho] = 0, interior states move
    // toward rho with probability phi/(1+phi). Gauss-Seidel sweep to a fixed
    // point; the chain is tiny so convergence is immediate.
    const double p_up = phi / (1.0 + phi);
    std::vector<double> p(static_cast<std::size_t>(rho) + 1, 0.0);
    p[0] = 1.0;
    for (int iter = 0; iter < 200000; ++iter) {
        double delta = 0.0;
        for (int i = 1; i < rho; ++i) {
            const double v = p_up * p[static_cast<std::size_t>(i) + 1] +
                             (1.0 - p_up) * p[static_cast<std::size_t>(i) - 1];
            delta = std::max(delta, std::abs(v - p[static_cast<std::size_t>(i)]));
            p[static_cast<std::size_t>(i)] = v;
        }
        if (delta < 1e-15) break;
    }
    return p[static_cast<std::size_t>(k)];
}

double gamblers_ruin_monte_carlo(Rng& rng, double phi, int rho, int k, long trials) {
    if (!(phi > 0.0)) fail(Errc::DegenerateInput, "phi must be positive");
    if (k < 0 || k > rho) fail(Errc::DegenerateInput, "need 0 <= k <= rho");
    const double p_up = phi / (1.0 + phi);
    long hits = 0;
    for (long t = 0; t < trials; ++t) {
        int pos = k;
        while (pos > 0 && pos < rho) pos += rng.bernoulli(p_up) ? 1 : -1;
        if (pos == 0) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(trials);
}

// ---------------------------------------------------------------------------
// Selfish mining with bribing

double smb_gamma(double beta_h, double beta_r) {
    if (beta_h <= 0.0 && beta_r <= 0.0) fail(Errc::BothZero, "beta_h and beta_r are both zero");
    return (beta_h / 2.0 + beta_r) / (beta_h + beta_r);
}

double smb_beta_lower(double beta_h, double beta_r) {
    if (beta_h < 0.0 || beta_r < 0.0 || beta_h + beta_r > 1.0 + 1e-12)
        fail(Errc::DegenerateInput, "fractions out of range");
    if (beta_h <= 0.0 && beta_r <= 0.0) fail(Errc::BothZero, "beta_h and beta_r are both zero");
    if (beta_h <= 0.0) return 0.0;  // fully rational setting
    return beta_h / (2.0 * beta_r + 4.0 * beta_h);
}

// ---------------------------------------------------------------------------
// Transaction withholding

TwUtilities tw_utilities(std::span<const double> fees, int own_index, double delta, double p_su,
                         int n, long horizon) {
    if (own_index < 0 || static_cast<std::size_t>(own_index) >= fees.size())
        fail(Errc::DegenerateInput, "own_index out of range");
    if (!(p_su > 0.0 && p_su <= 1.0)) fail(Errc::DegenerateInput, "p_su in (0,1]");
    if (!(delta >= 0.0 && delta < 1.0)) fail(Errc::DegenerateInput, "delta in [0,1)");
    double total = 0.0;
    for (double f : fees) total += f;
    const double own = fees[static_cast<std::size_t>(own_index)];

    // sum_{t=1..horizon} delta^t p (1-p)^{n t}; ratio form keeps it stable.
    const double q = delta * std::pow(1.0 - p_su, n);
    double series = 0.0;
    double term = p_su * q;  // t = 1
    for (long t = 1; t <= horizon; ++t) {
        series += term;
        term *= q;
    }
    const double tail = q < 1.0 ? term / (1.0 - q) : term * static_cast<double>(horizon);
    if (delta > 0.0 && tail >= 1e-12)
        fail(Errc::TailNotConverged, "truncated tail " + std::to_string(tail) + " >= 1e-12");

    TwUtilities u;
    u.tail = tail;
    u.u_follow = total * series;
    u.u_withhold = (total - own) * series + own / p_su;
    return u;
}

double tw_geometric_closed_form(double delta, double p_su, int n) {
    const double q = delta * std::pow(1.0 - p_su, n);
    return p_su * q / (1.0 - q);
}

double epsilon_g_bound(double total_withheld_fee, int l) {
    if (total_withheld_fee < 0.0) fail(Errc::DegenerateInput, "fee must be >= 0");
    if (l < 0) fail(Errc::DegenerateInput, "l must be >= 0");
    return total_withheld_fee * std::pow(2.0, -static_cast<double>(l));
}

// ---------------------------------------------------------------------------
// Reward-scheme horizons

long alpha_th(double p_fr, double vartheta) {
    if (!(p_fr > 0.0 && p_fr < 1.0)) fail(Errc::DegenerateInput, "p_fr strictly in (0,1)");
    if (!(vartheta > 0.0 && vartheta < 1.0)) fail(Errc::DegenerateInput, "vartheta strictly in (0,1)");
    return 1 + static_cast<long>(std::floor(std::log(1.0 - p_fr) / std::log(vartheta)));
}

long alpha_opt(double p_fr, double delta_adv, double vartheta) {
    if (!(delta_adv > 0.0)) fail(Errc::DegenerateInput, "delta must be > 0");
    if (!(p_fr >= 0.0)) fail(Errc::DegenerateInput, "p_fr must be >= 0");
    if (!(vartheta > 0.0 && vartheta < 1.0)) fail(Errc::DegenerateInput, "vartheta strictly in (0,1)");
    const double ratio = delta_adv / (p_fr + delta_adv);
    return 1 + static_cast<long>(std::floor(std::log(ratio) / std::log(vartheta)));
}

double deflationary_payoff_gap(double p_fr, double delta_adv, double vartheta,
                               double capital_lambda, double r_block, double theta, long alpha2) {
    if (!(vartheta > 0.0 && vartheta < 1.0)) fail(Errc::DegenerateInput, "vartheta strictly in (0,1)");
    const double va = std::pow(vartheta, static_cast<double>(alpha2));
    // worst case d -> infinity: the (1 - vartheta^d) factor goes to 1
    return capital_lambda * theta * r_block *
           ((1.0 - va) / (1.0 - vartheta) * delta_adv - va * p_fr / (1.0 - vartheta));
}

bool ahp_check(double theta, double r_block, double p_h, double chi) {
    if (theta < 0.0 || r_block < 0.0 || p_h < 0.0 || chi < 0.0)
        fail(Errc::DegenerateInput, "inputs must be non-negative");
    return theta * r_block * p_h > chi;
}

// ---------------------------------------------------------------------------
// Aggregates

UtilityAggregate utility_aggregate(double v_hon, double v_rat, double v_adv, double beta_hon,
                                   double beta_rat, double beta_adv) {
    UtilityAggregate out;
    const double nondev = beta_hon + beta_rat;
    if (beta_adv > 0.0) {
        out.u_a = v_adv / beta_adv;
    } else {
        out.adv_term_omitted = true;
        if (v_adv == 0.0) out.u_a = 0.0;  // no adversary, no utility
    }
    if (nondev > 0.0) {
        if (out.u_a.has_value())
            out.u_d = (v_hon + v_rat) / nondev - *out.u_a;
        else
            out.u_d = (v_hon + v_rat) / nondev;
    } else {
        out.nondev_term_omitted = true;
    }
    return out;
}

double goldfinger_value(double theta_init, double theta_now, double c1, double coin_payoff) {
    if (c1 < 0.0) fail(Errc::DegenerateInput, "short position size must be >= 0");
    return theta_now * coin_payoff + (theta_init - theta_now) * c1;
}

} // namespace powsim::analytics
