#include "powsim/sim.hpp"

#include "powsim/strategies.hpp"

#include <algorithm>
#include <cmath>

namespace powsim {

using nlohmann::json;

const char* party_name(Party p) {
    switch (p) {
        case Party::Honest: return "honest";
        case Party::Rational: return "rational";
        case Party::Adversarial: return "adversarial";
    }
    return "?";
}

const char* attack_outcome_name(AttackOutcome o) {
    switch (o) {
        case AttackOutcome::NotAttempted: return "not_attempted";
        case AttackOutcome::Succeeded: return "succeeded";
        case AttackOutcome::Failed: return "failed";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Config

void MinerPopulation::validate() {
    if (n < 1) fail(Errc::ConfigInvalid, "need at least one miner");
    if (q < 1) fail(Errc::ConfigInvalid, "need q >= 1 queries per round");
    if (beta_hon < 0 || beta_rat < 0 || beta_adv < 0)
        fail(Errc::ConfigInvalid, "beta fractions must be non-negative");
    const double sum = beta_hon + beta_rat + beta_adv;
    if (std::abs(sum - 1.0) > 1e-12)
        fail(Errc::ValidationError,
             "beta_hon + beta_rat + beta_adv must equal 1, got " + std::to_string(sum));
    count_rat = static_cast<int>(std::lround(beta_rat * n));
    count_adv = static_cast<int>(std::lround(beta_adv * n));
    count_hon = n - count_rat - count_adv;
    if (count_hon < 0) fail(Errc::ConfigInvalid, "party counts exceed n");
    rounding_residue = count_hon - static_cast<int>(std::lround(beta_hon * n));
}

Party MinerPopulation::party_of(MinerId id) const {
    if (id < count_hon) return Party::Honest;
    if (id < count_hon + count_rat) return Party::Rational;
    return Party::Adversarial;
}

void ExternalityParams::validate() const {
    if (!(e_security > 0.0 && e_security < e_fairness && e_fairness < 1.0))
        fail(Errc::ConfigInvalid, "need 0 < e_security < e_fairness < 1");
    if (rho < 1) fail(Errc::ConfigInvalid, "rho must be >= 1");
}

void ExternalitySignal::flag(FlagKind kind, Round now) {
    flagged_events.emplace_back(now, kind);
    if (kind == FlagKind::Security) {
        security_latched = true;  // a consummated fork cannot be un-observed
    } else {
        fairness_until =
            params.fairness_window < 0 ? std::numeric_limits<Round>::max() : now + params.fairness_window;
    }
    refresh(now);
}

void ExternalitySignal::refresh(Round now) {
    if (security_latched)
        theta = params.e_security;
    else if (now <= fairness_until)
        theta = params.e_fairness;
    else
        theta = 1.0;
}

double SimConfig::base_rate() const {
    return 1.0 / (static_cast<double>(population.n) * static_cast<double>(population.q) *
                  epoch.target_block_interval);
}

double SimConfig::implied_chi1() const {
    return cost_per_query * static_cast<double>(population.n) *
           static_cast<double>(population.q) * epoch.target_block_interval;
}

void SimConfig::validate() {
    population.validate();
    if (pragthos.tau_clamp) epoch.tau_min = std::max(epoch.tau_min, 0.5);
    epoch.validate();
    rewards.validate();
    externality.validate();
    if (max_rounds < 1) fail(Errc::ConfigInvalid, "max_rounds must be positive");
    if (cost_per_query < 0 || mining_cost_per_block < 0)
        fail(Errc::ConfigInvalid, "costs must be non-negative");
    if (pragthos.l < 0) fail(Errc::ConfigInvalid, "filter bits must be >= 0");
    if (attack.kind == AttackKind::QuickFork) {
        if (attack.k < 1) fail(Errc::ConfigInvalid, "fork depth k must be >= 1");
        if (attack.launch_height <= attack.k)
            fail(Errc::ConfigInvalid, "launch height must exceed fork depth");
    }
    if (attack.kind == AttackKind::SelfishMiningBribing && !(attack.z > 0.0 && attack.z < 1.0))
        fail(Errc::ConfigInvalid, "bribe fraction z must be in (0,1)");
    for (const auto& t : injected_txs)
        if (t.target < 0 || t.target >= population.n)
            fail(Errc::ConfigInvalid, "injected tx target out of range");
    const double p = base_rate() / (initial_difficulty * epoch.tau_min);
    if (p > 1.0) fail(Errc::ConfigInvalid, "per-query success probability can exceed 1");
}

// ---------------------------------------------------------------------------
// Mining lottery

int attempt_mine(Rng& rng, double difficulty, long queries, double base_rate) {
    if (queries < 0) fail(Errc::ProbabilityOutOfRange, "queries must be >= 0");
    const double p = base_rate / difficulty;
    if (!(p >= 0.0 && p <= 1.0))
        fail(Errc::ProbabilityOutOfRange, "base_rate/difficulty = " + std::to_string(p));
    return static_cast<int>(rng.binomial(queries, p));
}

// ---------------------------------------------------------------------------
// PublicView

void PublicView::add_visible(const BlockId& id) {
    if (!visible.insert(id).second) return;
    const Block& b = tree->block(id);
    visible_tips.erase(b.parent);
    // a block already superseded by a visible child is not a tip
    bool has_visible_child = false;
    for (const auto& t : visible_tips) {
        if (tree->block(t).parent == id) {
            has_visible_child = true;
            break;
        }
    }
    if (!has_visible_child) visible_tips.insert(id);
}

bool PublicView::branch_excluded(const BlockId& tip) const {
    if (excluded_branch_roots.empty()) return false;
    for (const auto& root : excluded_branch_roots)
        if (tree->is_ancestor(root, tip)) return true;
    return false;
}

BlockId PublicView::best_tip(bool respect_exclusions) const {
    const Block* best = nullptr;
    for (const auto& t : visible_tips) {
        if (respect_exclusions && branch_excluded(t)) continue;
        const Block& b = tree->block(t);
        if (!best) {
            best = &b;
            continue;
        }
        if (b.height != best->height) {
            if (b.height > best->height) best = &b;
        } else if (b.actual_round != best->actual_round) {
            if (b.actual_round < best->actual_round) best = &b;
        } else if (b.id < best->id) {
            best = &b;
        }
    }
    return best ? best->id : tree->genesis();
}

Height PublicView::best_height(bool respect_exclusions) const {
    return tree->block(best_tip(respect_exclusions)).height;
}

std::vector<BlockId> PublicView::tied_best_tips(bool respect_exclusions) const {
    Height h = -1;
    for (const auto& t : visible_tips) {
        if (respect_exclusions && branch_excluded(t)) continue;
        h = std::max(h, tree->block(t).height);
    }
    std::vector<BlockId> out;
    for (const auto& t : visible_tips) {
        if (respect_exclusions && branch_excluded(t)) continue;
        if (tree->block(t).height == h) out.push_back(t);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Observer

Observer::Observer(ExternalityParams params, const RewardSchedule* rewards) : rewards_(rewards) {
    params.validate();
    sig_.params = params;
}

Height Observer::max_deficit(const BlockId& branch_root) const {
    auto it = branch_max_deficit_.find(branch_root);
    return it == branch_max_deficit_.end() ? 0 : it->second;
}

void Observer::update(const PublicView& view, std::span<const BlockId> newly_visible,
                      std::span<const PublicEvent> events, Round now) {
    const ChainTree& tree = *view.tree;
    if (!primed_) {
        best_ = tree.genesis();
        best_height_ = 0;
        primed_ = true;
    }

    // Register branch roots that became public this round. A branch that was
    // mined privately scores the full deficit it accrued while invisible.
    for (const auto& id : newly_visible) {
        const Block& b = tree.block(id);
        if (b.parent == best_ || tree.is_ancestor(id, best_) || tree.is_ancestor(b.parent, best_)) {
            // parent lies on the leading line; this block forks off it unless
            // it extends the head itself
            if (b.parent != best_ && !tree.is_ancestor(id, best_)) {
                if (branch_max_deficit_.find(id) == branch_max_deficit_.end()) {
                    const Height fork_h = tree.block(b.parent).height;
                    branch_max_deficit_[id] = std::max<Height>(0, best_height_ - fork_h);
                }
            }
        }
    }

    // Track the current deficit of every visible non-leading tip.
    for (const auto& t : view.visible_tips) {
        if (t == best_ || tree.is_ancestor(best_, t) || tree.is_ancestor(t, best_)) continue;
        const BlockId lca = tree.lowest_common_ancestor(best_, t);
        const BlockId root = tree.ancestor_at(t, tree.block(lca).height + 1);
        auto& slot = branch_max_deficit_[root];
        slot = std::max(slot, best_height_ - tree.block(t).height);
    }

    // Fairness events: revealed whale-scale values.
    for (const auto& ev : events) {
        if (ev.kind == PublicEvent::Kind::RevealedValue && rewards_) {
            const double threshold =
                sig_.params.whale_fee_multiple * block_reward_at(*rewards_, ev.at_height);
            if (ev.amount >= threshold) sig_.flag(FlagKind::Fairness, now);
        } else if (ev.kind == PublicEvent::Kind::PoIInvalidation) {
            // a revealed proof-of-invalidity is a publicly proven fork
            sig_.flag(FlagKind::Security, now);
        }
    }

    // Leading-chain switch: if the new head descends from a branch that once
    // trailed by >= rho, a forking attack has consummated.
    const BlockId new_best = view.best_tip(true);
    if (new_best != best_) {
        if (!tree.is_ancestor(best_, new_best)) {
            const BlockId lca = tree.lowest_common_ancestor(best_, new_best);
            const BlockId root = tree.ancestor_at(new_best, tree.block(lca).height + 1);
            auto it = branch_max_deficit_.find(root);
            const Height hist = it == branch_max_deficit_.end() ? 0 : it->second;
            if (hist >= sig_.params.rho) sig_.flag(FlagKind::Security, now);
        }
        best_ = new_best;
    }
    best_height_ = tree.block(best_).height;
    sig_.refresh(now);
}

ExternalitySignal observer_update(Observer& eo, const PublicView& view,
                                  std::span<const BlockId> newly_visible,
                                  std::span<const PublicEvent> events, Round now) {
    eo.update(view, newly_visible, events, now);
    return eo.signal();
}

// ---------------------------------------------------------------------------
// ScenarioResult

double ScenarioResult::theta_during(Round r) const {
    double th = 1.0;
    for (const auto& [from, value] : theta_trace) {
        if (from <= r)
            th = value;
        else
            break;
    }
    return th;
}

const PartyStats& ScenarioResult::party(Party p) const {
    static const PartyStats empty{};
    auto it = stats.find(p);
    return it == stats.end() ? empty : it->second;
}

json ScenarioResult::to_json() const {
    json j;
    j["seed"] = seed;
    j["rounds"] = rounds_run;
    j["outcome"] = attack_outcome_name(attack_outcome);
    j["theta_final"] = theta_final;
    j["chain_height"] = chain_height;
    j["chain_blocks"] = chain_blocks;
    j["implied_chi1"] = implied_chi1;
    json trace = json::array();
    for (const auto& [r, th] : theta_trace) trace.push_back({{"from", r}, {"theta", th}});
    j["theta_trace"] = trace;
    json fl = json::array();
    for (const auto& [r, kind] : flags)
        fl.push_back({{"round", r}, {"kind", kind == FlagKind::Security ? "security" : "fairness"}});
    j["flags"] = fl;
    for (const auto& [p, st] : stats) {
        json s;
        s["payoff_fiat"] = st.payoff_fiat;
        s["coin_reward"] = st.coin_reward;
        s["blocks_total"] = st.blocks_total;
        s["blocks_on_chain"] = st.blocks_on_chain;
        s["blocks_orphaned"] = st.blocks_orphaned;
        s["query_cost"] = st.query_cost;
        j["party"][party_name(p)] = s;
    }
    json rp = json::array();
    for (const auto& d : rp_decisions)
        rp.push_back({{"round", d.round},
                      {"k", d.k},
                      {"rho", d.rho},
                      {"lead", d.lead},
                      {"joined", d.joined},
                      {"v_deviate", d.v_deviate},
                      {"v_follow", d.v_follow}});
    j["rp_decisions"] = rp;
    j["poi_placed_mined"] = poi_placed_mined;
    j["poi_placed_included"] = poi_placed_included;
    j["poi_invalidation"] = poi_invalidation;
    if (goldfinger.has_value()) j["goldfinger"] = *goldfinger;
    json fees = json::object();
    for (const auto& [m, v] : per_miner_fee_payoff) fees[std::to_string(m)] = v;
    j["per_miner_fee_payoff"] = fees;
    if (!chain_export.empty()) j["chain_export"] = chain_export;
    return j;
}

// ---------------------------------------------------------------------------
// Simulation

Simulation::Simulation(SimConfig c)
    : cfg(std::move(c)),
      tree((cfg.validate(), cfg.epoch), cfg.initial_difficulty, 0),
      rng(cfg.rng_seed),
      hasher(cfg.rng_seed ^ 0x9e3779b97f4a7c15ULL) {
    pub.tree = &tree;
    pub.add_visible(tree.genesis());
    observer = Observer(cfg.externality, &cfg.rewards);
    miners.resize(static_cast<std::size_t>(cfg.population.n));
    for (int i = 0; i < cfg.population.n; ++i) {
        MinerState& m = miners[static_cast<std::size_t>(i)];
        m.id = i;
        m.party = cfg.population.party_of(i);
        const std::uint64_t tag = static_cast<std::uint64_t>(i);
        m.dest = hasher.digest2(as_bytes(std::string("dest")),
                                std::span<const std::uint8_t>(
                                    reinterpret_cast<const std::uint8_t*>(&tag), sizeof(tag)));
    }
    query_cost_paid.assign(miners.size(), 0.0);
    blocks_mined_by.assign(miners.size(), 0);
    theta_trace.emplace_back(0, 1.0);
    strategies_ = StrategySet::create(*this);
}

Simulation::~Simulation() = default;

Round Simulation::delivery_round(Party sender) const {
    if (cfg.network == NetworkMode::FrontRunning && sender != Party::Adversarial)
        return round + 1;  // the front-runner maximally delays everyone else
    return round;
}

void Simulation::broadcast_block(const BlockId& id, Party sender) {
    pending_blocks_.push_back({id, delivery_round(sender)});
}

void Simulation::broadcast_tx(const Transaction& tx, Party sender) {
    pending_txs_.push_back({tx, delivery_round(sender)});
}

Digest256 Simulation::fresh_digest(const char* tag, std::uint64_t a, std::uint64_t b) {
    std::uint64_t words[2] = {a, b};
    return hasher.digest2(as_bytes(std::string(tag)),
                          std::span<const std::uint8_t>(
                              reinterpret_cast<const std::uint8_t*>(words), sizeof(words)));
}

bool Simulation::tx_included_on_chain(const BlockId& tip, const Digest256& tx_id) const {
    const Block* cur = &tree.block(tip);
    for (;;) {
        for (const auto& tx : cur->txs)
            if (tx.id == tx_id) return true;
        if (cur->id == tree.genesis()) return false;
        cur = &tree.block(cur->parent);
    }
}

bool Simulation::tx_admissible(const MinerState& m, const Transaction& tx,
                               const BlockId& parent) const {
    if (tx_included_on_chain(parent, tx.id)) return false;
    if (cfg.pragthos.tx_inclusion) {
        const Digest256 parent_hash = tree.block(parent).id.v;
        if (!pragthos::c1_filter(hasher, tx, as_bytes(m.dest), parent_hash, cfg.pragthos.l))
            return false;
    }
    return true;
}

void Simulation::deliver_due() {
    for (auto it = pending_blocks_.begin(); it != pending_blocks_.end();) {
        if (it->deliver_at <= round) {
            if (!pub.is_visible(it->id)) {
                pub.add_visible(it->id);
                newly_visible_.push_back(it->id);
            }
            it = pending_blocks_.erase(it);
        } else {
            ++it;
        }
    }
    for (auto it = pending_txs_.begin(); it != pending_txs_.end();) {
        if (it->deliver_at <= round) {
            mempool.reveal(it->tx);
            it = pending_txs_.erase(it);
        } else {
            ++it;
        }
    }
}

void Simulation::inject_due_txs() {
    for (const auto& inj : cfg.injected_txs) {
        if (inj.round != round) continue;
        Transaction tx = Transaction::normal(
            fresh_digest("injtx", static_cast<std::uint64_t>(inj.round),
                         (static_cast<std::uint64_t>(inj.target) << 32) | inj.tag),
            inj.fee);
        MinerState& m = miners[static_cast<std::size_t>(inj.target)];
        m.known_txs.push_back(tx);
        const RationalTxPolicy policy =
            m.party == Party::Rational ? cfg.rational_tx_policy : RationalTxPolicy::Gossip;
        if (txwithhold_filter(policy) == TxRelay::Gossip) broadcast_tx(tx, m.party);
    }
}

Block Simulation::assemble_block(MinerState& m, const BlockId& parent, const MiningDirective& d) {
    Block b;
    b.id = BlockId{fresh_digest("blk", static_cast<std::uint64_t>(m.id) << 32 |
                                           static_cast<std::uint64_t>(round & 0xFFFFFFFF),
                                ++block_seq_)};
    b.parent = parent;
    b.height = tree.block(parent).height + 1;
    b.miner = m.id;
    b.declared_timestamp = d.declared_timestamp;
    b.actual_round = round;
    b.nonce = block_seq_;
    for (const auto& tx : d.tx_candidates)
        if (tx_admissible(m, tx, parent)) b.txs.push_back(tx);
    if (d.bribe_fraction > 0.0) {
        const double amount = d.bribe_fraction * block_reward_at(cfg.rewards, b.height);
        b.txs.push_back(Transaction::bribe(
            fresh_digest("bribe", static_cast<std::uint64_t>(b.height), block_seq_), amount));
    }
    return b;
}

void Simulation::step_round() {
    ++round;
    newly_visible_.clear();
    round_events_.clear();

    inject_due_txs();
    strategies_->begin_round(*this);

    for (auto& m : miners) {
        MiningDirective d = strategies_->directive(*this, m);
        if (d.abstain) continue;
        const double difficulty = tree.difficulty_for_child(d.parent);
        query_cost_paid[static_cast<std::size_t>(m.id)] +=
            cfg.cost_per_query * static_cast<double>(cfg.population.q);
        const int mined = attempt_mine(rng, difficulty, cfg.population.q, cfg.base_rate());
        BlockId parent = d.parent;
        for (int j = 0; j < mined; ++j) {
            Block blk = assemble_block(m, parent, d);
            const Block& stored = tree.append(std::move(blk));
            ++blocks_mined_by[static_cast<std::size_t>(m.id)];
            parent = stored.id;
            if (d.broadcast) {
                broadcast_block(stored.id, m.party);
                m.self_tip = stored.id;
                m.self_tip_height = stored.height;
            }
            strategies_->on_mined(*this, m, stored);
        }
    }

    deliver_due();
    strategies_->end_round(*this);
    deliver_due();

    observer.update(pub, newly_visible_, round_events_, round);
    if (theta_trace.back().second != observer.theta())
        theta_trace.emplace_back(round + 1, observer.theta());
}

ScenarioResult Simulation::run() {
    while (round < cfg.max_rounds) {
        step_round();
        if (attack_done && cfg.stop_on_attack_end) break;
    }
    return finalize();
}

ScenarioResult Simulation::finalize() {
    ScenarioResult res;
    res.seed = cfg.rng_seed;
    res.rounds_run = round;
    res.theta_trace = theta_trace;
    res.theta_final = observer.theta();
    res.flags = observer.signal().flagged_events;
    res.implied_chi1 = cfg.implied_chi1();
    res.rp_decisions = rp_decisions;
    res.poi_placed_mined = poi_placed_mined;
    res.poi_placed_included = poi_placed_included;
    res.poi_invalidation = poi_invalidation;

    res.attack_outcome = attack_outcome;

    res.stats[Party::Honest] = {};
    if (cfg.population.count_rat > 0) res.stats[Party::Rational] = {};
    if (cfg.population.count_adv > 0) res.stats[Party::Adversarial] = {};

    const BlockId final_tip = pub.best_tip(true);
    const auto final_chain = tree.chain_to(final_tip);
    res.chain_height = tree.block(final_tip).height;
    res.chain_blocks = static_cast<long>(final_chain.size()) - 1;

    std::unordered_set<BlockId> on_chain(final_chain.begin(), final_chain.end());

    // settlement over the final longest chain
    for (std::size_t i = 1; i < final_chain.size(); ++i) {
        const Block& b = tree.block(final_chain[i]);
        const Party p = cfg.population.party_of(b.miner);
        PartyStats& st = res.stats[p];
        const double th = res.theta_during(b.actual_round);
        const double reward = block_reward_at(cfg.rewards, b.height);
        st.blocks_on_chain += 1;
        st.coin_reward += reward;
        st.payoff_fiat += th * reward;
        for (const auto& tx : b.txs) {
            if (tx.kind == TxKind::Normal && tx.fee > 0.0) {
                st.coin_reward += tx.fee;
                st.payoff_fiat += th * tx.fee;
                res.per_miner_fee_payoff[b.miner] += th * tx.fee;
            } else if (tx.kind == TxKind::Bribe && i + 1 < final_chain.size()) {
                // claimed by the miner of the next block on the chain
                const Block& child = tree.block(final_chain[i + 1]);
                const Party claimant = cfg.population.party_of(child.miner);
                const double th_claim = res.theta_during(child.actual_round);
                res.stats[p].coin_reward -= tx.bribe_amount;
                res.stats[p].payoff_fiat -= th_claim * tx.bribe_amount;
                res.stats[claimant].coin_reward += tx.bribe_amount;
                res.stats[claimant].payoff_fiat += th_claim * tx.bribe_amount;
            }
        }
    }

    tree.for_each_block([&](const Block& b) {
        if (b.id == tree.genesis()) return;
        const Party p = cfg.population.party_of(b.miner);
        res.stats[p].blocks_total += 1;
        if (!on_chain.count(b.id)) res.stats[p].blocks_orphaned += 1;
    });

    for (const auto& m : miners) {
        PartyStats& st = res.stats[m.party];
        st.query_cost += query_cost_paid[static_cast<std::size_t>(m.id)];
        st.payoff_fiat -= query_cost_paid[static_cast<std::size_t>(m.id)];
    }

    if (cfg.attack.kind == AttackKind::SelfishMiningBribing && cfg.population.count_adv > 0 &&
        res.chain_blocks > 0) {
        // a fairness attack succeeds when the chain share beats the power share
        const double share = static_cast<double>(res.party(Party::Adversarial).blocks_on_chain) /
                             static_cast<double>(res.chain_blocks);
        const double beta_adv = static_cast<double>(cfg.population.count_adv) / cfg.population.n;
        res.attack_outcome =
            share > beta_adv ? AttackOutcome::Succeeded : AttackOutcome::Failed;
    }

    if (cfg.goldfinger.enabled) {
        const double coin = res.party(Party::Adversarial).coin_reward;
        res.goldfinger = analytics::goldfinger_value(cfg.goldfinger.theta_init, res.theta_final,
                                                     cfg.goldfinger.c1, coin);
    }

    if (cfg.export_chain && !cfg.export_path.empty()) {
        tree.export_jsonl_file(cfg.export_path);
        res.chain_export = cfg.export_path;
    }
    return res;
}

ScenarioResult run_simulation(const SimConfig& cfg) {
    Simulation sim(cfg);
    return sim.run();
}

} // namespace powsim
