#include "powsim/strategies.hpp"

#include <algorithm>
#include <cmath>

namespace powsim {

TxRelay txwithhold_filter(RationalTxPolicy policy) {
    return policy == RationalTxPolicy::Withhold ? TxRelay::Withhold : TxRelay::Gossip;
}

namespace {

/// Visible tip of the branch rooted at `root` (root itself if nothing builds on it yet).
BlockId branch_tip(const Simulation& sim, const BlockId& root) {
    BlockId best = root;
    Height best_h = sim.tree.block(root).height;
    for (const auto& t : sim.pub.visible_tips) {
        if (!sim.tree.is_ancestor(root, t)) continue;
        const Height h = sim.tree.block(t).height;
        if (h > best_h) {
            best = t;
            best_h = h;
        }
    }
    return best;
}

/// Best visible tip that does not descend from `excluded_root`.
BlockId best_tip_outside(const Simulation& sim, const BlockId& excluded_root) {
    const Block* best = nullptr;
    for (const auto& t : sim.pub.visible_tips) {
        if (sim.tree.is_ancestor(excluded_root, t)) continue;
        if (sim.pub.branch_excluded(t)) continue;
        const Block& b = sim.tree.block(t);
        if (!best || b.height > best->height ||
            (b.height == best->height &&
             (b.actual_round < best->actual_round ||
              (b.actual_round == best->actual_round && b.id < best->id))))
            best = &b;
    }
    return best ? best->id : sim.tree.genesis();
}

std::vector<Transaction> mempool_candidates(const Simulation& sim, const MinerState& m) {
    std::vector<Transaction> out = sim.mempool.txs;
    for (const auto& tx : m.known_txs)
        if (!sim.mempool.is_public(tx.id)) out.push_back(tx);
    return out;
}

/// Plain protocol-following directive: extend `tip` truthfully, include what's heard.
MiningDirective protocol_directive(Simulation& sim, MinerState& m, const BlockId& tip) {
    MiningDirective d;
    d.parent = tip;
    d.declared_timestamp = sim.round;
    d.broadcast = true;
    d.tx_candidates = mempool_candidates(sim, m);
    return d;
}

} // namespace

// ---------------------------------------------------------------------------
// Honest

bool HonestPolicy::participation_profitable(Simulation& sim) const {
    const BlockId tip = sim.public_best(true);
    const double difficulty = sim.tree.difficulty_for_child(tip);
    const double p_query = sim.cfg.base_rate() / difficulty;
    const double p_h = 1.0 - std::pow(1.0 - p_query, static_cast<double>(sim.cfg.population.q));
    const double chi_round =
        sim.cfg.cost_per_query * static_cast<double>(sim.cfg.population.q);
    const double reward =
        block_reward_at(sim.cfg.rewards, sim.tree.block(tip).height + 1);
    return analytics::ahp_check(sim.theta_now(), reward, p_h, chi_round);
}

BlockId HonestPolicy::pick_tip(Simulation& sim, MinerState& m) {
    const auto tied = sim.pub.tied_best_tips(true);
    BlockId tip;
    if (tied.size() >= 2 && sim.cfg.smb_tie_break) {
        // modified-protocol tie rule: choose uniformly among competing tips
        tip = tied[static_cast<std::size_t>(sim.rng.next_below(tied.size()))];
    } else {
        tip = sim.public_best(true);
    }
    // Under front-running delays a miner keeps building on its own latest
    // block until the network catches up.
    if (m.self_tip_height > sim.tree.block(tip).height && sim.tree.contains(m.self_tip) &&
        !sim.pub.branch_excluded(m.self_tip))
        return m.self_tip;
    return tip;
}

MiningDirective HonestPolicy::act(Simulation& sim, MinerState& m, const BlockId& target_override) {
    if (sim.cfg.enforce_ahp_abstain && !participation_profitable(sim)) {
        MiningDirective d;
        d.abstain = true;
        return d;
    }
    const BlockId tip =
        target_override.v.is_zero() ? pick_tip(sim, m) : target_override;
    return protocol_directive(sim, m, tip);
}

// ---------------------------------------------------------------------------
// Difficulty-altering attacker

void DaaAttacker::begin_round(Simulation& sim) {
    if (launched_ || sim.cfg.population.count_adv == 0) return;
    const auto& ep = sim.cfg.epoch;
    const Height target = static_cast<Height>(
        std::floor(sim.cfg.attack.r1 * static_cast<double>(ep.lambda)));
    if (sim.public_height(true) < target) return;

    launched_ = true;
    fork_base_ = sim.tree.ancestor_at(sim.public_best(true), target);
    const Block& base = sim.tree.block(fork_base_);
    fork_round_ = sim.round;
    fork_declared_ = base.declared_timestamp;
    const double beta_adv =
        static_cast<double>(sim.cfg.population.count_adv) / sim.cfg.population.n;
    alpha_ = sim.cfg.attack.alpha > 0.0 ? sim.cfg.attack.alpha
                                        : std::max(1.0, beta_adv / ep.tau_min);
    epoch_blocks_needed_ = ep.lambda - base.epoch_pos;
    sim.attack_outcome = AttackOutcome::Failed;  // until the fork takes over
}

MiningDirective DaaAttacker::directive(Simulation& sim, MinerState& m) {
    if (!launched_ || sim.attack_done)
        return protocol_directive(sim, m, sim.public_best(true));
    MiningDirective d;
    d.parent = priv_.empty() ? fork_base_ : priv_.back();
    // apparent mining rate slowed by alpha; timestamps stay monotone
    const Round stretched =
        fork_declared_ + static_cast<Round>(std::llround(
                             alpha_ * static_cast<double>(sim.round - fork_round_)));
    d.declared_timestamp = std::max(stretched, sim.tree.block(d.parent).declared_timestamp);
    d.broadcast = false;
    return d;
}

void DaaAttacker::on_mined(Simulation& sim, MinerState& m, const Block& b) {
    if (!launched_ || sim.attack_done) return;
    priv_.push_back(b.id);
    if (static_cast<long>(priv_.size()) == epoch_blocks_needed_) recalc_done_ = true;
}

void DaaAttacker::publish_all(Simulation& sim) {
    for (const auto& id : priv_) sim.broadcast_block(id, Party::Adversarial);
}

void DaaAttacker::end_round(Simulation& sim) {
    if (!launched_ || sim.attack_done) return;
    const long plan_cap =
        epoch_blocks_needed_ +
        static_cast<long>(std::ceil(sim.cfg.attack.r2 * sim.cfg.epoch.lambda));
    const Height priv_height =
        priv_.empty() ? sim.tree.block(fork_base_).height : sim.tree.block(priv_.back()).height;
    if (recalc_done_ && priv_height > sim.public_height(true)) {
        publish_all(sim);
        sim.attack_outcome = AttackOutcome::Succeeded;
        sim.attack_done = true;
    } else if (static_cast<long>(priv_.size()) >= plan_cap) {
        // the cheap epoch ran out before the fork caught up
        sim.attack_outcome = AttackOutcome::Failed;
        sim.attack_done = true;
    }
}

// ---------------------------------------------------------------------------
// Quick fork attacker

void QuickForkAttacker::begin_round(Simulation& sim) {
    if (launched_ || sim.cfg.population.count_adv == 0) return;
    if (sim.public_height(true) < sim.cfg.attack.launch_height) return;
    k_ = sim.cfg.attack.k;
    const BlockId best = sim.public_best(true);
    fork_base_ = sim.tree.ancestor_at(best, sim.tree.block(best).height - k_);
    launched_ = true;
    sim.attack_outcome = AttackOutcome::Failed;
}

MiningDirective QuickForkAttacker::directive(Simulation& sim, MinerState& m) {
    if (!launched_ || sim.attack_done)
        return protocol_directive(sim, m, sim.public_best(true));
    MiningDirective d;
    d.parent = fork_tip_.v.is_zero() ? fork_base_ : branch_tip(sim, fork_root_);
    d.declared_timestamp = sim.round;
    d.broadcast = true;  // the fork is public bait for rational miners
    d.tx_candidates = mempool_candidates(sim, m);
    if (!bribe_planted_ && sim.cfg.attack.bribe > 0.0) {
        d.tx_candidates.push_back(Transaction::bribe(
            sim.fresh_digest("qfbribe", static_cast<std::uint64_t>(sim.round), 0),
            sim.cfg.attack.bribe));
    }
    return d;
}

void QuickForkAttacker::on_mined(Simulation& sim, MinerState& m, const Block& b) {
    if (!launched_ || sim.attack_done) return;
    if (fork_root_.v.is_zero() && b.parent == fork_base_) fork_root_ = b.id;
    if (fork_root_.v.is_zero()) return;
    if (sim.tree.is_ancestor(fork_root_, b.id)) {
        fork_tip_ = b.id;
        bribe_planted_ = true;
    }
}

void QuickForkAttacker::end_round(Simulation& sim) {
    if (!launched_ || sim.attack_done) return;
    if (fork_root_.v.is_zero()) {
        // nothing mined on the fork yet; the honest lead over the fork point
        // decides whether the window is already gone
        const Height lead = sim.public_height(true) - sim.tree.block(fork_base_).height;
        if (lead >= sim.cfg.externality.rho) {
            sim.attack_outcome = AttackOutcome::Failed;
            sim.attack_done = true;
        }
        return;
    }
    if (sim.pub.excluded_branch_roots.count(fork_root_)) {
        sim.attack_outcome = AttackOutcome::Failed;  // proven fork
        sim.attack_done = true;
        return;
    }
    const BlockId ftip = branch_tip(sim, fork_root_);
    const BlockId htip = best_tip_outside(sim, fork_root_);
    const Height lead = sim.tree.block(htip).height - sim.tree.block(ftip).height;
    const BlockId best = sim.public_best(true);
    if (sim.tree.is_ancestor(fork_root_, best)) {
        sim.attack_outcome = AttackOutcome::Succeeded;  // fork is the longest chain
        sim.attack_done = true;
    } else if (lead >= sim.cfg.externality.rho) {
        sim.attack_outcome = AttackOutcome::Failed;
        sim.attack_done = true;
    }
}

// ---------------------------------------------------------------------------
// Selfish mining with bribing

void SmbAttacker::begin_round(Simulation& sim) {
    if (base_.v.is_zero()) {
        base_ = sim.public_best(true);
        pub_height_prev_ = sim.public_height(true);
    }
}

MiningDirective SmbAttacker::directive(Simulation& sim, MinerState& m) {
    if (sim.cfg.population.count_adv == 0) return protocol_directive(sim, m, sim.public_best(true));
    MiningDirective d;
    if (race_) {
        d.parent = race_tip_;
        d.broadcast = true;  // winning the race is published on the spot
    } else {
        d.parent = priv_.empty() ? base_ : priv_.back();
        d.broadcast = false;
    }
    d.declared_timestamp = sim.round;
    d.bribe_fraction = sim.cfg.attack.z;  // every block carries the tie bribe
    return d;
}

void SmbAttacker::on_mined(Simulation& sim, MinerState& m, const Block& b) {
    if (!race_) priv_.push_back(b.id);
}

void SmbAttacker::reset_to(Simulation& sim, const BlockId& new_base) {
    base_ = new_base;
    priv_.clear();
    race_ = false;
    race_tip_ = BlockId{};
}

void SmbAttacker::end_round(Simulation& sim) {
    if (sim.cfg.population.count_adv == 0) return;
    const BlockId pub_best = sim.public_best(true);
    const Height pub_h = sim.public_height(true);

    if (race_) {
        if (pub_h > sim.tree.block(race_tip_).height) reset_to(sim, pub_best);
        pub_height_prev_ = sim.public_height(true);
        return;
    }

    if (!priv_.empty()) {
        const Height priv_h = sim.tree.block(priv_.back()).height;
        const Height lead = priv_h - pub_h;
        const bool honest_advanced = pub_h > pub_height_prev_;
        if (lead < 0) {
            reset_to(sim, pub_best);
        } else if (honest_advanced) {
            if (lead == 0) {
                // match: publish and let the tie race decide
                for (const auto& id : priv_) sim.broadcast_block(id, Party::Adversarial);
                race_ = true;
                race_tip_ = priv_.back();
                priv_.clear();
            } else if (lead == 1) {
                // threatened: publish everything and take the chain by one
                for (const auto& id : priv_) sim.broadcast_block(id, Party::Adversarial);
                reset_to(sim, priv_.empty() ? pub_best : priv_.back());
            }
            // lead >= 2: keep mining in private
        }
    } else {
        base_ = pub_best;
    }
    pub_height_prev_ = sim.public_height(true);
}

// ---------------------------------------------------------------------------
// Rational

void RationalPolicy::begin_round(Simulation& sim) {
    if (sim.cfg.attack.kind != AttackKind::QuickFork || fork_evaluated_ || sim.attack_done)
        return;
    if (sim.cfg.population.count_rat == 0) return;
    // Detect a public fork: a visible tip off the leading chain.
    const BlockId best = sim.public_best(true);
    for (const auto& t : sim.pub.visible_tips) {
        if (t == best || sim.tree.is_ancestor(t, best) || sim.tree.is_ancestor(best, t)) continue;
        const BlockId lca = sim.tree.lowest_common_ancestor(best, t);
        fork_root_ = sim.tree.ancestor_at(t, sim.tree.block(lca).height + 1);
        evaluate_fork(sim);
        return;
    }
}

void RationalPolicy::evaluate_fork(Simulation& sim) {
    fork_evaluated_ = true;
    const auto& cfg = sim.cfg;
    const BlockId best = sim.public_best(true);
    const Block& lca = sim.tree.block(sim.tree.block(fork_root_).parent);
    const int k_obs = static_cast<int>(sim.tree.block(best).height - lca.height);
    const Height lead =
        sim.tree.block(best).height - sim.tree.block(branch_tip(sim, fork_root_)).height;
    const int rho = cfg.externality.rho;

    const double beta_hon = static_cast<double>(cfg.population.count_hon) / cfg.population.n;
    const double beta_rat = static_cast<double>(cfg.population.count_rat) / cfg.population.n;

    RpJoinDecision dec;
    dec.round = sim.round;
    dec.k = k_obs;
    dec.rho = rho;
    dec.lead = lead;

    // Deviation guard: never take an action that certainly ends at
    // theta = e_security. A fork at depth >= rho is flagged the moment it
    // wins, so joining it is out regardless of payoff.
    const bool guard_ok = k_obs < rho && lead < rho;

    if (guard_ok && beta_hon > 0.0 && beta_hon < 0.5) {
        const double chi1 =
            cfg.mining_cost_per_block > 0.0 ? cfg.mining_cost_per_block : cfg.implied_chi1();
        const Height h = sim.tree.block(best).height;
        const double r_block = block_reward_at(cfg.rewards, h);
        const long phase = h / cfg.rewards.capital_lambda;
        const double next_ratio =
            block_reward_at(cfg.rewards, (phase + 1) * cfg.rewards.capital_lambda) /
            (r_block > 0.0 ? r_block : 1.0);
        auto qa = analytics::qf_analyze(cfg.population.n, beta_hon, beta_rat,
                                        1.0 - beta_hon - beta_rat, r_block / chi1, next_ratio,
                                        rho, k_obs);
        const long m = std::max<long>(1, qa.m_min);
        const auto payoff =
            cfg.pragthos.pc_mod
                ? analytics::qf_deviation_payoff_pcmod(cfg.population.n, beta_hon, beta_rat,
                                                       r_block, chi1, next_ratio, k_obs, m)
                : analytics::qf_deviation_payoff(cfg.population.n, beta_hon, beta_rat, r_block,
                                                 chi1, next_ratio, k_obs, m);
        dec.v_deviate = payoff.v_deviate;
        dec.v_follow = payoff.v_follow;
        dec.joined = payoff.v_deviate > payoff.v_follow;
    } else {
        dec.joined = false;
    }
    joined_fork_ = dec.joined;
    sim.rp_decisions.push_back(dec);
}

MiningDirective RationalPolicy::act(Simulation& sim, MinerState& m) {
    // tie race: collect the bribe by extending the bribing block
    const auto tied = sim.pub.tied_best_tips(true);
    if (tied.size() >= 2) {
        for (const auto& t : tied) {
            const Block& b = sim.tree.block(t);
            const bool has_bribe =
                std::any_of(b.txs.begin(), b.txs.end(),
                            [](const Transaction& tx) { return tx.kind == TxKind::Bribe; });
            if (has_bribe) return protocol_directive(sim, m, t);
        }
    }
    if (joined_fork_ && !sim.attack_done && !sim.pub.excluded_branch_roots.count(fork_root_))
        return protocol_directive(sim, m, branch_tip(sim, fork_root_));
    return honest.act(sim, m, BlockId{});
}

void RationalPolicy::end_round(Simulation& sim) {
    if (!joined_fork_) return;
    const BlockId ftip = branch_tip(sim, fork_root_);
    const BlockId htip = best_tip_outside(sim, fork_root_);
    const Height lead = sim.tree.block(htip).height - sim.tree.block(ftip).height;
    if (lead >= sim.cfg.externality.rho || sim.pub.excluded_branch_roots.count(fork_root_))
        joined_fork_ = false;  // the guard no longer holds
}

// ---------------------------------------------------------------------------
// PC-MOD honest machinery

void PcModState::begin_round(Simulation& sim) {
    if (!sim.cfg.pragthos.pc_mod) return;
    const auto& cfg = sim.cfg;
    const BlockId best = sim.public_best(true);
    const Height best_h = sim.tree.block(best).height;

    if (!armed_) {
        const double beta_hon = static_cast<double>(cfg.population.count_hon) / cfg.population.n;
        if (!(beta_hon > 0.0 && beta_hon < 0.5)) return;
        for (const auto& t : sim.pub.visible_tips) {
            if (t == best || sim.tree.is_ancestor(t, best) || sim.tree.is_ancestor(best, t))
                continue;
            const Height gap = best_h - sim.tree.block(t).height;
            const auto kth =
                pragthos::k_th_compute(beta_hon, cfg.externality.rho, cfg.pragthos.mu);
            // placement must land k_th below the referenced block, so the
            // trigger needs one block of headroom beyond the floored gap
            if (gap >= kth.floored + 1) {
                const BlockId lca = sim.tree.lowest_common_ancestor(best, t);
                accused_root_ = sim.tree.ancestor_at(t, sim.tree.block(lca).height + 1);
                accused_tip_ = t;
                k_th_ = kth.floored;
                armed_ = true;
                break;
            }
        }
        if (!armed_) return;
    } else {
        if (sim.pub.excluded_branch_roots.count(accused_root_)) {
            armed_ = false;
            return;
        }
        accused_tip_ = branch_tip(sim, accused_root_);
    }

    // Commit (or refresh) per honest miner; the commitment references the
    // miner's current chain head.
    const Height next_placement = sim.tree.block(accused_tip_).height + 1;
    for (auto& ms : sim.miners) {
        if (ms.party != Party::Honest) continue;
        auto& pm = per_miner_[ms.id];
        if (pm.placed) continue;
        const bool stale =
            pm.committed && next_placement > pm.commit.committed_height - k_th_;
        if (!pm.committed || (stale && best_h > pm.commit.committed_height)) {
            auto [commit, secret] =
                pragthos::make_poi(sim.rng, sim.hasher, sim.tree.block(best).id.v, best_h);
            commit.creator = ms.id;
            pm.commit = commit;
            pm.secret = secret;
            pm.referenced = best;
            pm.committed = true;
            pm.tx = Transaction::poi_commit(
                sim.fresh_digest("poitx", static_cast<std::uint64_t>(ms.id),
                                 static_cast<std::uint64_t>(sim.round)),
                commit.commitment);
            pm.tx_id = pm.tx.id;
            sim.broadcast_tx(pm.tx, Party::Honest);  // anyone mining the fork may include it
        }
    }
}

BlockId PcModState::divert_target(Simulation& sim, const MinerState& m) const {
    if (!armed_) return BlockId{};
    auto it = per_miner_.find(m.id);
    if (it == per_miner_.end() || !it->second.committed || it->second.placed) return BlockId{};
    // configurable fraction of honest power diverts during the trigger window
    const int covered = static_cast<int>(
        std::ceil(sim.cfg.pragthos.divert_fraction * sim.cfg.population.count_hon));
    if (m.id >= covered) return BlockId{};
    return accused_tip_;
}

std::vector<Transaction> PcModState::poi_candidates(Simulation& sim, MinerState& m) {
    auto it = per_miner_.find(m.id);
    if (it == per_miner_.end() || !it->second.committed || it->second.placed) return {};
    return {it->second.tx};
}

void PcModState::note_included(Simulation& sim, const Block& b) {
    if (!armed_) return;
    if (!sim.tree.is_ancestor(accused_root_, b.id)) return;
    for (auto& [mid, pm] : per_miner_) {
        if (!pm.committed || pm.placed) continue;
        for (const auto& tx : b.txs) {
            if (tx.id == pm.tx_id) {
                pm.placed = true;
                pm.placed_height = b.height;
                pm.placed_by = b.miner;
                if (b.miner == mid)
                    ++sim.poi_placed_mined;
                else
                    ++sim.poi_placed_included;
            }
        }
    }
}

void PcModState::end_round(Simulation& sim) {
    if (!armed_ || !sim.cfg.pragthos.pc_mod) return;
    accused_tip_ = branch_tip(sim, accused_root_);
    const BlockId htip = best_tip_outside(sim, accused_root_);
    if (sim.tree.block(accused_tip_).height <= sim.tree.block(htip).height) return;

    // The fork took the lead: reveal. A single valid invalidation proves it.
    std::vector<MinerId> order;
    for (const auto& [mid, pm] : per_miner_) order.push_back(mid);
    std::sort(order.begin(), order.end());
    for (MinerId mid : order) {
        auto& pm = per_miner_[mid];
        if (!pm.placed) continue;
        pragthos::PoIReveal reveal;
        reveal.m_secret = pm.secret;
        reveal.referenced_block = pm.referenced;
        reveal.placement_height = pm.placed_height;
        const auto verdict = pragthos::verify_poi_reveal(pm.commit, reveal, sim.tree,
                                                         accused_tip_, k_th_, sim.hasher);
        if (verdict == pragthos::PoIVerdict::ValidInvalidation) {
            sim.exclude_branch(accused_root_);
            PublicEvent ev;
            ev.kind = PublicEvent::Kind::PoIInvalidation;
            ev.round = sim.round;
            ev.accused_branch_root = accused_root_;
            sim.emit_event(ev);
            sim.poi_invalidation = true;
            armed_ = false;
            return;
        }
    }
}

// ---------------------------------------------------------------------------
// StrategySet

std::unique_ptr<StrategySet> StrategySet::create(Simulation& sim) {
    auto set = std::make_unique<StrategySet>();
    switch (sim.cfg.attack.kind) {
        case AttackKind::None:
            break;
        case AttackKind::DifficultyAltering:
            set->attacker = std::make_unique<DaaAttacker>();
            break;
        case AttackKind::QuickFork:
            set->attacker = std::make_unique<QuickForkAttacker>();
            break;
        case AttackKind::SelfishMiningBribing:
            set->attacker = std::make_unique<SmbAttacker>();
            break;
    }
    return set;
}

void StrategySet::begin_round(Simulation& sim) {
    pcmod.begin_round(sim);
    if (attacker && sim.cfg.population.count_adv > 0) attacker->begin_round(sim);
    rational.begin_round(sim);
}

MiningDirective StrategySet::directive(Simulation& sim, MinerState& m) {
    switch (m.party) {
        case Party::Honest: {
            BlockId override_tip{};
            if (sim.cfg.pragthos.pc_mod) override_tip = pcmod.divert_target(sim, m);
            MiningDirective d = honest.act(sim, m, override_tip);
            if (!override_tip.v.is_zero()) {
                auto poi = pcmod.poi_candidates(sim, m);
                d.tx_candidates.insert(d.tx_candidates.end(), poi.begin(), poi.end());
            }
            return d;
        }
        case Party::Rational:
            return rational.act(sim, m);
        case Party::Adversarial:
            if (attacker) return attacker->directive(sim, m);
            return honest.act(sim, m, BlockId{});
    }
    return honest.act(sim, m, BlockId{});
}

void StrategySet::on_mined(Simulation& sim, MinerState& m, const Block& b) {
    if (sim.cfg.pragthos.pc_mod) pcmod.note_included(sim, b);
    if (attacker && m.party == Party::Adversarial) attacker->on_mined(sim, m, b);
}

void StrategySet::end_round(Simulation& sim) {
    pcmod.end_round(sim);
    if (attacker && sim.cfg.population.count_adv > 0) attacker->end_round(sim);
    rational.end_round(sim);
}

} // namespace powsim
