#pragma once

#include "powsim/errors.hpp"
#include "powsim/rng.hpp"

#include <optional>
#include <span>
#include <vector>

namespace powsim::analytics {

// ---------------------------------------------------------------------------
// Difficulty-altering attack

struct Concentration {
    double theta_scale = 0.0;  // expected rounds to mine a block, up to scale
    double epsilon = 0.0;      // user-supplied deviation half-width
    double tail_bound = 0.0;   // exp(-theta_scale * epsilon^2 / 3)
};

struct DaaAnalysis {
    double beta_lower = 0.0;
    double tau_adv = 0.0;
    double tau_hon = 0.0;
    bool feasible = false;
    Concentration concentration;
};

/**
 * Smallest adversarial fraction that can fork via timestamp stretching:
 * the lesser root of beta^2 - (3+tau)beta + (1+tau) = 0.
 */
double daa_beta_lower(double tau_min);

/// Post-recalculation difficulty factors for the private and honest branches.
struct TauPair {
    double tau_adv;
    double tau_hon;
};
TauPair daa_tau_pair(double r1, double alpha, double beta_a, double tau_min);

/// Strict timing inequality: private branch finishes its r2 window first.
bool daa_feasible(double beta_a, double tau_min, double r1, double r2, double alpha);

DaaAnalysis daa_analyze(double beta_a, double tau_min, double r1, double r2, double alpha,
                        double theta_scale, double epsilon);

// ---------------------------------------------------------------------------
// Quick fork

struct QfAnalysis {
    double eta = 0.0;        // r_block / chi1
    double eta_bound = 0.0;  // deviation profitable above this
    double phi = 0.0;        // beta_hon / (beta_rat + beta_adv)
    double varpi = 0.0;
    long k_limit = 0;        // deepest fork that still wins w.p. >= (n-1)/n
    long m_min = 0;          // minimal overtake extension
    double success_prob = 0.0;
};

QfAnalysis qf_analyze(int n, double beta_hon, double beta_rat, double beta_adv, double eta,
                      double vartheta, int rho, int k);

struct QfPayoffs {
    double v_deviate;
    double v_follow;
};

/**
 * Expected payoffs for a party holding beta_par of the power when k chain
 * blocks are orphaned and the fork extends m blocks into the next phase.
 * Deviators share the fork's rewards among beta_rat + beta_adv.
 */
QfPayoffs qf_deviation_payoff(int n, double beta_hon, double beta_par, double r_block, double chi1,
                              double vartheta, long k, long m);

/**
 * Same comparison with the commit/reveal countermeasure active: honest power
 * mines the fork too, so the deviator's share collapses to beta_par and the
 * orphaned-cost term always dominates.
 */
QfPayoffs qf_deviation_payoff_pcmod(int n, double beta_hon, double beta_par, double r_block,
                                    double chi1, double vartheta, long k, long m);

/// (1 - phi^(rho-k)) / (1 - phi^rho); (rho-k)/rho at phi = 1.
double gamblers_ruin_closed_form(double phi, int rho, int k);

/// Absorption probability by dynamic programming on states {0..rho}.
double gamblers_ruin_oracle(double phi, int rho, int k);

/// Monte Carlo estimate of the same absorption probability.
double gamblers_ruin_monte_carlo(Rng& rng, double phi, int rho, int k, long trials);

// ---------------------------------------------------------------------------
// Selfish mining with bribing

/// Fraction of non-adversarial power on the adversarial tie block.
double smb_gamma(double beta_h, double beta_r);

/// Profitability threshold beta_h / (2 beta_r + 4 beta_h) == (1-g)/(3-2g).
double smb_beta_lower(double beta_h, double beta_r);

// ---------------------------------------------------------------------------
// Transaction withholding

struct TwUtilities {
    double u_follow;
    double u_withhold;
    double tail;  // truncation remainder of the discounted sum
};

TwUtilities tw_utilities(std::span<const double> fees, int own_index, double delta, double p_su,
                         int n, long horizon);

/// Closed form of sum_{t>=1} delta^t p (1-p)^{n t} for the constant case.
double tw_geometric_closed_form(double delta, double p_su, int n);

double epsilon_g_bound(double total_withheld_fee, int l);

// ---------------------------------------------------------------------------
// Reward-scheme horizons

/// 1 + floor(log(1-p_fr)/log(vartheta)).
long alpha_th(double p_fr, double vartheta);

/// 1 + floor(log(delta/(p_fr+delta))/log(vartheta)).
long alpha_opt(double p_fr, double delta_adv, double vartheta);

/**
 * Lower bound on the payoff difference between a delta-advantaged attacker
 * running alpha2 phases and the front-running baseline, at worst case
 * d -> infinity. Non-negative whenever alpha2 >= alpha_opt.
 */
double deflationary_payoff_gap(double p_fr, double delta_adv, double vartheta,
                               double capital_lambda, double r_block, double theta, long alpha2);

/// theta * r_block * p_H > chi (strict).
bool ahp_check(double theta, double r_block, double p_h, double chi);

// ---------------------------------------------------------------------------
// Aggregates

struct UtilityAggregate {
    std::optional<double> u_d;  // defender difference utility
    std::optional<double> u_a;  // adversary per-capita utility
    bool adv_term_omitted = false;
    bool nondev_term_omitted = false;
};

/// Per-capita payoff aggregates from empirical fiat payoffs.
UtilityAggregate utility_aggregate(double v_hon, double v_rat, double v_adv, double beta_hon,
                                   double beta_rat, double beta_adv);

/// Goldfinger overlay: theta_now * coin_payoff + (theta_init - theta_now) * c1.
double goldfinger_value(double theta_init, double theta_now, double c1, double coin_payoff);

} // namespace powsim::analytics
