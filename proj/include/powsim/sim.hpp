#pragma once

#include "powsim/analytics.hpp"
#include "powsim/chain.hpp"
#include "powsim/errors.hpp"
#include "powsim/hash.hpp"
#include "powsim/rng.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <memory>
#include <optional>
#include <unordered_set>
#include <vector>

namespace powsim {

enum class Party { Honest, Rational, Adversarial };
const char* party_name(Party p);

struct MinerPopulation {
    double beta_hon = 1.0;
    double beta_rat = 0.0;
    double beta_adv = 0.0;
    int n = 10;
    long q = 64;  // queries per miner per round

    // Derived by validate(): counts per party are round(beta*n) with the
    // rounding residue assigned to honest.
    int count_hon = 0;
    int count_rat = 0;
    int count_adv = 0;
    int rounding_residue = 0;

    void validate();
    Party party_of(MinerId id) const;
};

enum class FlagKind { Fairness, Security };

struct ExternalityParams {
    double e_fairness = 0.3;
    double e_security = 0.01;
    int rho = 6;                      // EO fork tolerance, blocks
    double cr = 1.0;                  // conversion-rate factor, held constant
    double whale_fee_multiple = 10.0; // fairness threshold vs r_block
    Round fairness_window = -1;       // <0: fairness flag persists to run end

    void validate() const;
};

/// theta(t) in {1, e_fairness, e_security}; a security flag latches.
struct ExternalitySignal {
    ExternalityParams params;
    double theta = 1.0;
    std::vector<std::pair<Round, FlagKind>> flagged_events;
    bool security_latched = false;
    Round fairness_until = -1;

    void flag(FlagKind kind, Round now);
    void refresh(Round now);
};

enum class NetworkMode { Immediate, FrontRunning };

enum class AttackKind { None, DifficultyAltering, QuickFork, SelfishMiningBribing };

struct AttackSpec {
    AttackKind kind = AttackKind::None;
    // difficulty altering
    double r1 = 0.0;
    double r2 = 1.0;
    double alpha = 0.0;  // <= 0 selects the optimum beta_adv / tau_min
    // quick fork
    int k = 3;
    double bribe = 0.0;
    Height launch_height = 12;
    // selfish mining with bribing
    double z = 0.02;
};

enum class RationalTxPolicy { Gossip, Withhold };

struct PragthosSwitches {
    bool pc_mod = false;
    bool tau_clamp = false;  // raises tau_min to 1/2
    bool tx_inclusion = false;
    double mu = 0.2;         // threshold-gap failure tolerance
    int l = 8;               // filter bits
    double divert_fraction = 1.0;
};

struct InjectedTx {
    Round round = 1;
    MinerId target = 0;
    double fee = 1.0;
    std::uint32_t tag = 0;
};

struct GoldfingerSpec {
    bool enabled = false;
    double c1 = 0.0;
    double theta_init = 1.0;
};

struct SimConfig {
    MinerPopulation population;
    EpochParams epoch;
    RewardSchedule rewards;
    ExternalityParams externality;
    double mining_cost_per_block = 0.0;  // chi1, used by the analytic comparators
    double cost_per_query = 0.0;         // chi
    Round max_rounds = 20000;
    std::uint64_t rng_seed = 1;
    NetworkMode network = NetworkMode::Immediate;
    AttackSpec attack;
    RationalTxPolicy rational_tx_policy = RationalTxPolicy::Gossip;
    PragthosSwitches pragthos;
    bool smb_tie_break = false;  // honest pick uniformly among tied tips
    std::vector<InjectedTx> injected_txs;
    GoldfingerSpec goldfinger;
    bool stop_on_attack_end = true;
    bool enforce_ahp_abstain = false;
    double initial_difficulty = 1.0;
    bool export_chain = false;
    std::string export_path;

    /// Per-query success probability at difficulty 1, calibrated so the full
    /// network needs target_block_interval rounds per block.
    double base_rate() const;
    /// chi1 implied by the per-query cost at difficulty 1.
    double implied_chi1() const;

    void validate();
};

enum class AttackOutcome { NotAttempted, Succeeded, Failed };
const char* attack_outcome_name(AttackOutcome o);

struct PartyStats {
    double payoff_fiat = 0.0;
    double coin_reward = 0.0;
    long blocks_total = 0;
    long blocks_on_chain = 0;
    long blocks_orphaned = 0;
    double query_cost = 0.0;
};

struct RpJoinDecision {
    Round round = 0;
    int k = 0;
    int rho = 0;
    Height lead = 0;
    bool joined = false;
    double v_deviate = 0.0;
    double v_follow = 0.0;
};

struct ScenarioResult {
    std::uint64_t seed = 0;
    Round rounds_run = 0;
    AttackOutcome attack_outcome = AttackOutcome::NotAttempted;
    double theta_final = 1.0;
    std::vector<std::pair<Round, double>> theta_trace;  // (effective_from, theta)
    std::vector<std::pair<Round, FlagKind>> flags;
    std::map<Party, PartyStats> stats;
    Height chain_height = 0;
    long chain_blocks = 0;
    double implied_chi1 = 0.0;
    std::vector<RpJoinDecision> rp_decisions;
    long poi_placed_mined = 0;
    long poi_placed_included = 0;
    bool poi_invalidation = false;
    std::optional<double> goldfinger;
    std::map<MinerId, double> per_miner_fee_payoff;
    std::string chain_export;

    double theta_during(Round r) const;
    const PartyStats& party(Party p) const;
    nlohmann::json to_json() const;
};

/// Binomial mining lottery: number of successful queries this round.
int attempt_mine(Rng& rng, double difficulty, long queries, double base_rate);

// ---------------------------------------------------------------------------
// Public view and the external observer

struct PublicView {
    const ChainTree* tree = nullptr;
    std::unordered_set<BlockId> visible;
    std::set<BlockId> visible_tips;
    std::unordered_set<BlockId> excluded_branch_roots;

    bool is_visible(const BlockId& id) const { return visible.count(id) != 0; }
    void add_visible(const BlockId& id);
    bool branch_excluded(const BlockId& tip) const;

    /// Longest visible chain; ties by earliest actual_round then smallest id.
    BlockId best_tip(bool respect_exclusions = true) const;
    Height best_height(bool respect_exclusions = true) const;
    std::vector<BlockId> tied_best_tips(bool respect_exclusions = true) const;
};

struct PublicEvent {
    enum class Kind { RevealedValue, PoIInvalidation };
    Kind kind = Kind::RevealedValue;
    Round round = 0;
    double amount = 0.0;       // revealed fee or bribe
    Height at_height = 0;      // height used to scale the whale threshold
    BlockId accused_branch_root{};
};

/**
 * The external observer. Sees only broadcast data: chain structure of visible
 * blocks and revealed values. Flags Security when a fork that historically
 * trailed the leading chain by >= rho blocks (counting rounds where the
 * branch was not public at all) takes the lead; flags Fairness on revealed
 * whale-scale values; sets theta per the three-valued externality rule.
 */
class Observer {
public:
    Observer() = default;
    Observer(ExternalityParams params, const RewardSchedule* rewards);

    void update(const PublicView& view, std::span<const BlockId> newly_visible,
                std::span<const PublicEvent> events, Round now);

    const ExternalitySignal& signal() const { return sig_; }
    double theta() const { return sig_.theta; }
    Height max_deficit(const BlockId& branch_root) const;

private:
    const RewardSchedule* rewards_ = nullptr;
    ExternalitySignal sig_;
    BlockId best_{};
    Height best_height_ = 0;
    bool primed_ = false;
    std::unordered_map<BlockId, Height> branch_max_deficit_;
};

/// Operation-shaped wrapper: advance the observer one round, return signal.
ExternalitySignal observer_update(Observer& eo, const PublicView& view,
                                  std::span<const BlockId> newly_visible,
                                  std::span<const PublicEvent> events, Round now);

// ---------------------------------------------------------------------------
// Engine

struct Mempool {
    std::vector<Transaction> txs;
    std::unordered_set<Digest256> ids;

    void reveal(const Transaction& tx) {
        if (ids.insert(tx.id).second) txs.push_back(tx);
    }
    bool is_public(const Digest256& id) const { return ids.count(id) != 0; }
};

struct MinerState {
    MinerId id = 0;
    Party party = Party::Honest;
    Digest256 dest;                   // coinbase address hash for the C1 filter
    BlockId self_tip{};               // own latest broadcast block (front-running lag)
    Height self_tip_height = -1;
    std::vector<Transaction> known_txs;  // privately heard, not yet public
};

struct MiningDirective {
    bool abstain = false;
    BlockId parent{};
    Round declared_timestamp = 0;
    bool broadcast = true;
    double bribe_fraction = 0.0;  // attach Bribe(z * r_block) when > 0
    std::vector<Transaction> tx_candidates;
};

struct StrategySet;  // defined in strategies.hpp

class Simulation {
public:
    explicit Simulation(SimConfig cfg);
    ~Simulation();

    ScenarioResult run();

    /// One round of the pipeline; exposed for step-level tests.
    void step_round();
    ScenarioResult finalize();

    // --- engine state, accessible to strategy code ---
    SimConfig cfg;
    ChainTree tree;
    Rng rng;
    KeyedHasher hasher;
    PublicView pub;
    Observer observer;
    Mempool mempool;
    std::vector<MinerState> miners;
    Round round = 0;

    AttackOutcome attack_outcome = AttackOutcome::NotAttempted;
    bool attack_done = false;

    std::vector<double> query_cost_paid;           // per miner
    std::vector<long> blocks_mined_by;             // per miner
    std::vector<std::pair<Round, double>> theta_trace;
    std::vector<RpJoinDecision> rp_decisions;
    long poi_placed_mined = 0;
    long poi_placed_included = 0;
    bool poi_invalidation = false;

    // --- services for strategy code ---
    double theta_now() const { return observer.theta(); }
    BlockId public_best(bool respect_exclusions = true) const {
        return pub.best_tip(respect_exclusions);
    }
    Height public_height(bool respect_exclusions = true) const {
        return pub.best_height(respect_exclusions);
    }
    void broadcast_block(const BlockId& id, Party sender);
    void broadcast_tx(const Transaction& tx, Party sender);
    Digest256 fresh_digest(const char* tag, std::uint64_t a, std::uint64_t b);
    bool tx_included_on_chain(const BlockId& tip, const Digest256& tx_id) const;
    /// Candidate passes the miner's inclusion rules at this parent.
    bool tx_admissible(const MinerState& m, const Transaction& tx, const BlockId& parent) const;
    void emit_event(PublicEvent ev) { round_events_.push_back(std::move(ev)); }
    void exclude_branch(const BlockId& root) { pub.excluded_branch_roots.insert(root); }

private:
    std::unique_ptr<StrategySet> strategies_;
    std::uint64_t block_seq_ = 0;

    struct PendingBlock {
        BlockId id;
        Round deliver_at;
    };
    struct PendingTx {
        Transaction tx;
        Round deliver_at;
    };
    std::vector<PendingBlock> pending_blocks_;
    std::vector<PendingTx> pending_txs_;
    std::vector<PublicEvent> round_events_;
    std::vector<BlockId> newly_visible_;

    Round delivery_round(Party sender) const;
    void deliver_due();
    void inject_due_txs();
    Block assemble_block(MinerState& m, const BlockId& parent, const MiningDirective& d);
};

/// Run a full scenario from a config (fresh Simulation).
ScenarioResult run_simulation(const SimConfig& cfg);

} // namespace powsim
