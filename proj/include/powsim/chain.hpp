#pragma once

#include "powsim/errors.hpp"
#include "powsim/hash.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace powsim {

using Round = std::int64_t;
using Height = std::int64_t;
using MinerId = std::int32_t;

inline constexpr MinerId kNoMiner = -1;

struct BlockId {
    Digest256 v;

    auto operator<=>(const BlockId&) const = default;
    bool is_genesis_reserved() const { return v.is_zero(); }
    std::string hex() const { return v.hex(); }

    static BlockId genesis() { return BlockId{}; }
};

} // namespace powsim

template <>
struct std::hash<powsim::BlockId> {
    std::size_t operator()(const powsim::BlockId& id) const noexcept {
        return std::hash<powsim::Digest256>{}(id.v);
    }
};

namespace powsim {

enum class TxKind : int { Normal, Bribe, PoICommit };

/**
 * A transaction as the simulator tracks it. `kind` (and the bribe amount /
 * commitment behind it) is simulator-internal metadata: the wire encoding
 * written by wire_bytes() carries only id, fee, claimable amount and payload,
 * so a PoI commitment is byte-indistinguishable from a Normal transaction
 * with a 32-byte payload.
 */
struct Transaction {
    Digest256 id;
    double fee = 0.0;
    TxKind kind = TxKind::Normal;
    double bribe_amount = 0.0;           // > 0 iff kind == Bribe
    Digest256 commitment;                // set iff kind == PoICommit
    std::vector<std::uint8_t> payload;

    /// Wire-level serialization; excludes `kind`.
    std::vector<std::uint8_t> wire_bytes() const;

    static Transaction normal(Digest256 id, double fee, std::vector<std::uint8_t> payload = {});
    static Transaction bribe(Digest256 id, double amount);
    static Transaction poi_commit(Digest256 id, const Digest256& commitment);
};

struct Block {
    BlockId id;
    BlockId parent;
    Height height = 0;
    MinerId miner = kNoMiner;
    Round declared_timestamp = 0;  // round index as claimed by the miner
    Round actual_round = 0;        // ground truth, simulator-only
    double difficulty_target = 1.0;
    std::vector<Transaction> txs;
    std::uint64_t nonce = 0;

    // Derived bookkeeping filled in by ChainTree::append.
    int epoch_pos = 0;             // 1..lambda position within the branch's epoch
    double next_difficulty = 1.0;  // difficulty for children of this block
    double epoch_tau = 1.0;        // tau applied if this block closed an epoch
};

struct EpochParams {
    int lambda = 2016;
    double tau_min = 0.25;
    double tau_max = 4.0;
    double target_block_interval = 10.0;  // rounds per block

    void validate() const;
};

enum class RewardFamily { Constant, Geometric, Harmonic, Custom };

/**
 * Phase-indexed block reward family: r_block in phase i is r0 * theta(i) with
 * theta(i) = 1, vartheta^i, 1/(i+1) or values[i].
 */
struct RewardSchedule {
    double r0 = 50.0;
    long capital_lambda = 210000;  // blocks per phase
    RewardFamily family = RewardFamily::Constant;
    double vartheta = 0.5;                // for Geometric, in (0,1]
    std::vector<double> values;           // for Custom

    void validate() const;
};

struct DifficultyUpdate {
    double new_difficulty;
    double tau_applied;
};

/**
 * Difficulty recalculation at an epoch boundary. `epoch_declared` holds the
 * declared timestamps of the lambda blocks of the closing epoch in order and
 * `boundary_timestamp` is the declared timestamp of the previous boundary
 * block (the epoch's predecessor). tau_raw is schedule/declared so slower
 * apparent mining lowers difficulty; the applied factor is clamped to
 * [tau_min, tau_max].
 */
DifficultyUpdate recalc_difficulty(std::span<const Round> epoch_declared,
                                   Round boundary_timestamp,
                                   const EpochParams& params,
                                   double old_difficulty);

DifficultyUpdate recalc_difficulty(std::span<const Block> epoch_blocks,
                                   Round boundary_timestamp,
                                   const EpochParams& params,
                                   double old_difficulty);

/// Reward for a block at `height`: r0 * theta(floor(height / capital_lambda)).
double block_reward_at(const RewardSchedule& schedule, Height height);

struct InflationReport {
    bool inflationary = false;
    bool conclusive = true;  // false when judged from a finite Custom prefix
    // (phase, partial sum) checkpoints of the vartheta series scaled by r0
    std::vector<std::pair<long, double>> partial_sums;
};

/// Divergence classification of the reward series over `horizon` phases.
InflationReport is_inflationary(const RewardSchedule& schedule, long horizon);

/**
 * Append-only block tree with fork tracking and per-branch difficulty.
 *
 * Epoch positions are inherited along parent edges, so after a fork each
 * branch runs its own epoch clock from the shared prefix and recalculates
 * difficulty from its own declared timestamps.
 */
class ChainTree {
public:
    ChainTree(EpochParams params, double initial_difficulty, Round genesis_timestamp);

    const EpochParams& epoch_params() const { return params_; }
    BlockId genesis() const { return genesis_; }
    std::size_t size() const { return blocks_.size(); }

    bool contains(const BlockId& id) const { return blocks_.count(id) != 0; }
    const Block& block(const BlockId& id) const;

    /// Insert a block. Derived fields (epoch_pos, next_difficulty, difficulty
    /// _target if unset) are computed here. Throws UnknownParent /
    /// DuplicateBlock / HeightMismatch.
    const Block& append(Block b);

    /// Difficulty a child of `parent` must be mined at.
    double difficulty_for_child(const BlockId& parent) const;

    const std::set<BlockId>& tips() const { return tips_; }
    /// Spec field per_branch_difficulty: difficulty at each tip's branch head.
    std::unordered_map<BlockId, double> per_branch_difficulty() const;

    /// Tip of maximal height; ties broken by earliest actual_round then
    /// smallest id. Pure function of the tree.
    BlockId longest_tip() const;
    std::vector<BlockId> longest_chain() const;
    std::vector<BlockId> chain_to(const BlockId& tip) const;

    Height height_of(const BlockId& id) const { return block(id).height; }

    /// Ancestor of `tip` at the given height (walks parent edges).
    BlockId ancestor_at(const BlockId& tip, Height height) const;
    bool is_ancestor(const BlockId& anc, const BlockId& desc) const;
    BlockId lowest_common_ancestor(const BlockId& a, const BlockId& b) const;

    /// One JSON record per block: id, parent, height, miner,
    /// declared_timestamp, actual_round, difficulty_target.
    void export_jsonl(std::ostream& out) const;
    void export_jsonl_file(const std::string& path) const;

    template <typename F>
    void for_each_block(F&& f) const {
        for (const auto& [id, b] : blocks_) f(b);
    }

private:
    EpochParams params_;
    BlockId genesis_;
    std::unordered_map<BlockId, Block> blocks_;
    std::unordered_map<BlockId, std::vector<BlockId>> children_;
    std::set<BlockId> tips_;
    std::vector<BlockId> insertion_order_;
};

} // namespace powsim
