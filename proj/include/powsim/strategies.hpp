#pragma once

#include "powsim/pragthos.hpp"
#include "powsim/sim.hpp"

#include <deque>
#include <memory>
#include <unordered_map>

namespace powsim {

enum class TxRelay { Gossip, Withhold };

/// Relay decision for a heard transaction under the given policy.
TxRelay txwithhold_filter(RationalTxPolicy policy);

/**
 * Protocol-following behavior shared by honest and (non-deviating) rational
 * miners: extend the longest visible chain with a truthful timestamp and all
 * admissible transactions; abstain when participation is unprofitable.
 */
struct HonestPolicy {
    MiningDirective act(Simulation& sim, MinerState& m, const BlockId& target_override);
    BlockId pick_tip(Simulation& sim, MinerState& m);
    bool participation_profitable(Simulation& sim) const;
};

/// Attacker interface driven by the engine's round pipeline.
class AttackerBase {
public:
    virtual ~AttackerBase() = default;
    virtual void begin_round(Simulation& sim) {}
    virtual MiningDirective directive(Simulation& sim, MinerState& m) = 0;
    virtual void on_mined(Simulation& sim, MinerState& m, const Block& b) {}
    virtual void end_round(Simulation& sim) {}
};

/**
 * Two-epoch timestamp-stretching attack. Forks privately at fraction r1 of
 * the epoch, stamps private blocks stretched by alpha so the private
 * recalculation lands at tau_min, then races through the cheap epoch and
 * publishes the moment the private chain out-heights the public one.
 */
class DaaAttacker : public AttackerBase {
public:
    void begin_round(Simulation& sim) override;
    MiningDirective directive(Simulation& sim, MinerState& m) override;
    void on_mined(Simulation& sim, MinerState& m, const Block& b) override;
    void end_round(Simulation& sim) override;

private:
    bool launched_ = false;
    BlockId fork_base_{};
    Round fork_round_ = 0;
    Round fork_declared_ = 0;
    double alpha_ = 1.0;
    std::vector<BlockId> priv_;
    long epoch_blocks_needed_ = 0;  // blocks to finish e_i on the private branch
    bool recalc_done_ = false;
    void publish_all(Simulation& sim);
};

/**
 * Fork k blocks behind the tip and mine it openly so rational miners can be
 * lured over. Succeeds when the fork catches the honest chain before ever
 * trailing it by rho.
 */
class QuickForkAttacker : public AttackerBase {
public:
    void begin_round(Simulation& sim) override;
    MiningDirective directive(Simulation& sim, MinerState& m) override;
    void on_mined(Simulation& sim, MinerState& m, const Block& b) override;
    void end_round(Simulation& sim) override;

    bool launched() const { return launched_; }
    const BlockId& fork_tip() const { return fork_tip_; }
    const BlockId& fork_root() const { return fork_root_; }
    int fork_depth_k() const { return k_; }

private:
    bool launched_ = false;
    bool bribe_planted_ = false;
    int k_ = 0;
    BlockId fork_base_{};
    BlockId fork_root_{};  // first block of the fork branch
    BlockId fork_tip_{};
};

/**
 * Selfish mining whose private blocks each carry a small bribe so rational
 * miners break tie races toward the attacker.
 */
class SmbAttacker : public AttackerBase {
public:
    void begin_round(Simulation& sim) override;
    MiningDirective directive(Simulation& sim, MinerState& m) override;
    void on_mined(Simulation& sim, MinerState& m, const Block& b) override;
    void end_round(Simulation& sim) override;

    bool in_race() const { return race_; }
    const BlockId& race_tip() const { return race_tip_; }

private:
    std::vector<BlockId> priv_;
    BlockId base_{};    // public block the private chain extends
    bool race_ = false;
    BlockId race_tip_{};
    Height pub_height_prev_ = 0;
    void reset_to(Simulation& sim, const BlockId& new_base);
};

/**
 * Conditionally-deviating party: follows the honest policy except where a
 * deviation clears both the payoff comparison and the observability guard.
 */
class RationalPolicy {
public:
    void begin_round(Simulation& sim);
    MiningDirective act(Simulation& sim, MinerState& m);
    void end_round(Simulation& sim);

    bool joined_fork() const { return joined_fork_; }

    HonestPolicy honest;

private:
    bool fork_evaluated_ = false;
    bool joined_fork_ = false;
    BlockId fork_root_{};
    void evaluate_fork(Simulation& sim);
};

/// Honest-side commit/reveal machinery when PC-MOD is switched on.
class PcModState {
public:
    void begin_round(Simulation& sim);
    // Returns a target override (fork tip) for honest miners diverted to
    // place their commitments; zero id means no diversion.
    BlockId divert_target(Simulation& sim, const MinerState& m) const;
    std::vector<Transaction> poi_candidates(Simulation& sim, MinerState& m);
    void note_included(Simulation& sim, const Block& b);
    void end_round(Simulation& sim);

private:
    struct PerMiner {
        bool committed = false;
        pragthos::PoICommit commit;
        std::vector<std::uint8_t> secret;
        BlockId referenced{};
        Transaction tx;
        Digest256 tx_id;
        bool placed = false;
        Height placed_height = 0;
        MinerId placed_by = kNoMiner;
    };
    std::unordered_map<MinerId, PerMiner> per_miner_;
    long k_th_ = 0;
    bool armed_ = false;
    BlockId accused_root_{};
    BlockId accused_tip_{};
    friend struct StrategySet;
};

struct StrategySet {
    HonestPolicy honest;
    RationalPolicy rational;
    std::unique_ptr<AttackerBase> attacker;
    PcModState pcmod;

    static std::unique_ptr<StrategySet> create(Simulation& sim);

    void begin_round(Simulation& sim);
    MiningDirective directive(Simulation& sim, MinerState& m);
    void on_mined(Simulation& sim, MinerState& m, const Block& b);
    void end_round(Simulation& sim);
};

} // namespace powsim
