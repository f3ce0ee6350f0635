#include "powsim/chain.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>

namespace powsim {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Transaction

std::vector<std::uint8_t> Transaction::wire_bytes() const {
    std::vector<std::uint8_t> out;
    out.reserve(32 + 8 + 8 + 4 + payload.size());
    out.insert(out.end(), id.bytes.begin(), id.bytes.end());
    auto put_double = [&out](double v) {
        std::uint64_t u;
        std::memcpy(&u, &v, 8);
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
    };
    put_double(fee);
    put_double(bribe_amount);  // claimable amount; 0 for plain txs
    const std::uint32_t n = static_cast<std::uint32_t>(payload.size());
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

Transaction Transaction::normal(Digest256 id, double fee, std::vector<std::uint8_t> payload) {
    Transaction t;
    t.id = id;
    t.fee = fee;
    t.kind = TxKind::Normal;
    t.payload = std::move(payload);
    return t;
}

Transaction Transaction::bribe(Digest256 id, double amount) {
    Transaction t;
    t.id = id;
    t.fee = 0.0;
    t.kind = TxKind::Bribe;
    t.bribe_amount = amount;
    return t;
}

Transaction Transaction::poi_commit(Digest256 id, const Digest256& commitment) {
    Transaction t;
    t.id = id;
    t.kind = TxKind::PoICommit;
    t.commitment = commitment;
    t.payload.assign(commitment.bytes.begin(), commitment.bytes.end());
    return t;
}

// ---------------------------------------------------------------------------
// Params

void EpochParams::validate() const {
    if (lambda < 1) fail(Errc::ConfigInvalid, "epoch lambda must be >= 1");
    if (!(tau_min > 0.0 && tau_min <= 1.0 && tau_max >= 1.0))
        fail(Errc::ConfigInvalid, "need 0 < tau_min <= 1 <= tau_max");
    if (!(target_block_interval > 0.0))
        fail(Errc::ConfigInvalid, "target_block_interval must be positive");
}

void RewardSchedule::validate() const {
    if (!(r0 >= 0.0)) fail(Errc::ConfigInvalid, "r0 must be non-negative");
    if (capital_lambda < 1) fail(Errc::ConfigInvalid, "phase length must be >= 1");
    if (family == RewardFamily::Geometric && !(vartheta > 0.0 && vartheta <= 1.0))
        fail(Errc::ConfigInvalid, "geometric vartheta must be in (0,1]");
    if (family == RewardFamily::Custom) {
        if (values.empty()) fail(Errc::ConfigInvalid, "custom series is empty");
        for (double v : values)
            if (!(v > 0.0)) fail(Errc::ConfigInvalid, "custom series values must be positive");
    }
}

// ---------------------------------------------------------------------------
// Difficulty

DifficultyUpdate recalc_difficulty(std::span<const Round> epoch_declared,
                                   Round boundary_timestamp,
                                   const EpochParams& params,
                                   double old_difficulty) {
    if (static_cast<int>(epoch_declared.size()) != params.lambda)
        fail(Errc::WrongEpochLength, "expected " + std::to_string(params.lambda) + " blocks, got " +
                                         std::to_string(epoch_declared.size()));
    Round prev = boundary_timestamp;
    for (Round t : epoch_declared) {
        if (t < prev) fail(Errc::NonMonotoneTimestamps, "declared timestamps must be non-decreasing");
        prev = t;
    }
    const double schedule = static_cast<double>(params.lambda) * params.target_block_interval;
    const double declared = static_cast<double>(epoch_declared.back() - boundary_timestamp);
    // A zero declared duration pins tau_raw at +inf; the clamp handles it.
    const double tau_raw = declared > 0.0 ? schedule / declared : params.tau_max;
    const double tau = std::clamp(tau_raw, params.tau_min, params.tau_max);
    return {old_difficulty * tau, tau};
}

DifficultyUpdate recalc_difficulty(std::span<const Block> epoch_blocks,
                                   Round boundary_timestamp,
                                   const EpochParams& params,
                                   double old_difficulty) {
    std::vector<Round> declared;
    declared.reserve(epoch_blocks.size());
    for (const Block& b : epoch_blocks) declared.push_back(b.declared_timestamp);
    return recalc_difficulty(std::span<const Round>(declared), boundary_timestamp, params,
                             old_difficulty);
}

// ---------------------------------------------------------------------------
// Rewards

namespace {

double vartheta_at(const RewardSchedule& s, long phase) {
    switch (s.family) {
        case RewardFamily::Constant:
            return 1.0;
        case RewardFamily::Geometric:
            return std::pow(s.vartheta, static_cast<double>(phase));
        case RewardFamily::Harmonic:
            return 1.0 / static_cast<double>(phase + 1);
        case RewardFamily::Custom:
            if (phase >= static_cast<long>(s.values.size()))
                fail(Errc::CustomSeriesExhausted,
                     "custom series has " + std::to_string(s.values.size()) + " phases, need " +
                         std::to_string(phase + 1));
            return s.values[static_cast<std::size_t>(phase)];
    }
    return 1.0;
}

} // namespace

double block_reward_at(const RewardSchedule& schedule, Height height) {
    if (height < 0) fail(Errc::ConfigInvalid, "height must be >= 0");
    const long phase = static_cast<long>(height / schedule.capital_lambda);
    return schedule.r0 * vartheta_at(schedule, phase);
}

InflationReport is_inflationary(const RewardSchedule& schedule, long horizon) {
    if (horizon < 1) fail(Errc::ConfigInvalid, "horizon must be >= 1");
    InflationReport rep;
    switch (schedule.family) {
        case RewardFamily::Constant:
            rep.inflationary = true;
            break;
        case RewardFamily::Harmonic:
            rep.inflationary = true;
            break;
        case RewardFamily::Geometric:
            rep.inflationary = schedule.vartheta >= 1.0;
            break;
        case RewardFamily::Custom:
            rep.conclusive = false;  // prefix evidence only
            break;
    }
    // Partial-sum trace at (roughly) doubling checkpoints.
    double sum = 0.0;
    long next_checkpoint = 1;
    const long limit = schedule.family == RewardFamily::Custom
                           ? std::min<long>(horizon, static_cast<long>(schedule.values.size()))
                           : horizon;
    for (long i = 0; i < limit; ++i) {
        sum += schedule.r0 * vartheta_at(schedule, i);
        if (i + 1 == next_checkpoint || i + 1 == limit) {
            rep.partial_sums.emplace_back(i + 1, sum);
            next_checkpoint *= 2;
        }
    }
    if (schedule.family == RewardFamily::Custom) {
        // Monotone unbounded-looking prefixes flag true; the caller is warned
        // via conclusive=false that a finite prefix cannot settle divergence.
        const auto& ps = rep.partial_sums;
        rep.inflationary =
            ps.size() >= 2 && ps.back().second > ps.front().second * 1.5 + schedule.r0;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// ChainTree

ChainTree::ChainTree(EpochParams params, double initial_difficulty, Round genesis_timestamp)
    : params_(params) {
    params_.validate();
    Block g;
    g.id = BlockId::genesis();
    g.parent = BlockId::genesis();
    g.height = 0;
    g.miner = kNoMiner;
    g.declared_timestamp = genesis_timestamp;
    g.actual_round = genesis_timestamp;
    g.difficulty_target = initial_difficulty;
    g.epoch_pos = 0;  // genesis sits on an epoch boundary
    g.next_difficulty = initial_difficulty;
    genesis_ = g.id;
    blocks_.emplace(g.id, std::move(g));
    tips_.insert(genesis_);
    insertion_order_.push_back(genesis_);
}

const Block& ChainTree::block(const BlockId& id) const {
    auto it = blocks_.find(id);
    if (it == blocks_.end()) fail(Errc::UnknownParent, "block not in tree: " + id.hex());
    return it->second;
}

double ChainTree::difficulty_for_child(const BlockId& parent) const {
    return block(parent).next_difficulty;
}

const Block& ChainTree::append(Block b) {
    if (blocks_.count(b.id)) fail(Errc::DuplicateBlock, b.id.hex());
    auto pit = blocks_.find(b.parent);
    if (pit == blocks_.end()) fail(Errc::UnknownParent, "parent missing: " + b.parent.hex());
    const Block& parent = pit->second;
    if (b.height != parent.height + 1)
        fail(Errc::HeightMismatch, "height " + std::to_string(b.height) + " after parent height " +
                                       std::to_string(parent.height));

    b.difficulty_target = parent.next_difficulty;
    b.epoch_pos = parent.epoch_pos + 1;
    if (b.epoch_pos == params_.lambda) {
        // This block closes its branch's epoch: collect the epoch's declared
        // timestamps (walking the branch) and rescale difficulty.
        std::vector<Round> declared(static_cast<std::size_t>(params_.lambda));
        declared.back() = b.declared_timestamp;
        const Block* cur = &parent;
        for (int i = params_.lambda - 2; i >= 0; --i) {
            declared[static_cast<std::size_t>(i)] = cur->declared_timestamp;
            cur = &blocks_.at(cur->parent);
        }
        // cur is now the previous boundary block
        const auto upd =
            recalc_difficulty(std::span<const Round>(declared), cur->declared_timestamp, params_,
                              b.difficulty_target);
        b.next_difficulty = upd.new_difficulty;
        b.epoch_tau = upd.tau_applied;
        b.epoch_pos = 0;  // children start a fresh epoch
    } else {
        b.next_difficulty = b.difficulty_target;
        b.epoch_tau = 1.0;
    }

    tips_.erase(b.parent);
    tips_.insert(b.id);
    children_[b.parent].push_back(b.id);
    insertion_order_.push_back(b.id);
    return blocks_.emplace(b.id, std::move(b)).first->second;
}

std::unordered_map<BlockId, double> ChainTree::per_branch_difficulty() const {
    std::unordered_map<BlockId, double> out;
    for (const auto& t : tips_) out.emplace(t, blocks_.at(t).next_difficulty);
    return out;
}

BlockId ChainTree::longest_tip() const {
    const Block* best = nullptr;
    for (const auto& t : tips_) {
        const Block& b = blocks_.at(t);
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
    return best->id;
}

std::vector<BlockId> ChainTree::chain_to(const BlockId& tip) const {
    std::vector<BlockId> out;
    const Block* cur = &block(tip);
    out.push_back(cur->id);
    while (cur->id != genesis_) {
        cur = &blocks_.at(cur->parent);
        out.push_back(cur->id);
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<BlockId> ChainTree::longest_chain() const { return chain_to(longest_tip()); }

BlockId ChainTree::ancestor_at(const BlockId& tip, Height height) const {
    const Block* cur = &block(tip);
    if (height > cur->height) fail(Errc::HeightMismatch, "ancestor height above tip");
    while (cur->height > height) cur = &blocks_.at(cur->parent);
    return cur->id;
}

bool ChainTree::is_ancestor(const BlockId& anc, const BlockId& desc) const {
    const Block& a = block(anc);
    const Block* cur = &block(desc);
    while (cur->height > a.height) cur = &blocks_.at(cur->parent);
    return cur->id == anc;
}

BlockId ChainTree::lowest_common_ancestor(const BlockId& a, const BlockId& b) const {
    const Block* x = &block(a);
    const Block* y = &block(b);
    while (x->height > y->height) x = &blocks_.at(x->parent);
    while (y->height > x->height) y = &blocks_.at(y->parent);
    while (x->id != y->id) {
        x = &blocks_.at(x->parent);
        y = &blocks_.at(y->parent);
    }
    return x->id;
}

void ChainTree::export_jsonl(std::ostream& out) const {
    for (const auto& id : insertion_order_) {
        const Block& b = blocks_.at(id);
        json j{{"id", b.id.hex()},
               {"parent", b.parent.hex()},
               {"height", b.height},
               {"miner", b.miner},
               {"declared_timestamp", b.declared_timestamp},
               {"actual_round", b.actual_round},
               {"difficulty_target", b.difficulty_target}};
        out << j.dump() << '\n';
    }
}

void ChainTree::export_jsonl_file(const std::string& path) const {
    std::ofstream f(path);
    if (!f) fail(Errc::IoError, "cannot open " + path);
    export_jsonl(f);
}

} // namespace powsim
