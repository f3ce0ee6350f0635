#pragma once

#include "powsim/chain.hpp"
#include "powsim/hash.hpp"
#include "powsim/rng.hpp"

#include <utility>
#include <vector>

namespace powsim::pragthos {

// ---------------------------------------------------------------------------
// Threshold gap

struct ThresholdGap {
    double exact;   // rho - log_phi(mu + phi^rho (1 - mu))
    long floored;   // integer block count used as the gap trigger
};

/**
 * Fork deficit at which a (beta_rat + beta_adv) coalition still overtakes
 * with probability >= 1 - mu. Requires beta_hon < 1/2 so phi < 1.
 */
ThresholdGap k_th_compute(double beta_hon, int rho, double mu);

// ---------------------------------------------------------------------------
// Proof of invalidity

struct PoICommit {
    Digest256 commitment;      // H(referenced block digest || m_secret)
    MinerId creator = kNoMiner;  // simulator-internal
    Height committed_height = 0; // height of the referenced block on the honest chain
};

struct PoIReveal {
    std::vector<std::uint8_t> m_secret;
    BlockId referenced_block;
    Height placement_height = 0;  // height on the accused chain holding the commit tx
};

/// Fresh commitment to `honest_tip_digest` with a 256-bit secret drawn from rng.
std::pair<PoICommit, std::vector<std::uint8_t>> make_poi(Rng& rng, const KeyedHasher& hasher,
                                                         const Digest256& honest_tip_digest,
                                                         Height height);

enum class PoIVerdict { ValidInvalidation, Invalid };

/**
 * Check a reveal against a commit found on the accused chain. Valid iff the
 * hash matches, the referenced block is in the tree, and the commit tx sits
 * at height <= committed_height - k_th on the accused chain. Throws
 * UnknownCommit when the commit tx is not on the accused chain at the claimed
 * placement height.
 */
PoIVerdict verify_poi_reveal(const PoICommit& commit, const PoIReveal& reveal,
                             const ChainTree& tree, const BlockId& accused_tip, long k_th,
                             const KeyedHasher& hasher);

struct PoiInclusion {
    double exact;        // 1 - (1 - beta_hon)^k_th
    double lower_bound;  // 1 - exp(-beta_hon * k_th)
};

PoiInclusion poi_inclusion_probability(double beta_hon, long k_th);

// ---------------------------------------------------------------------------
// Tx-inclusion filter

/**
 * C1: last l bits of H(tx || parent_hash) must equal the last l bits of
 * H(dest || parent_hash). l = 0 accepts everything.
 */
bool c1_filter(const KeyedHasher& hasher, std::span<const std::uint8_t> tx_wire,
               std::span<const std::uint8_t> dest, const Digest256& parent_hash, int l);

bool c1_filter(const KeyedHasher& hasher, const Transaction& tx, std::span<const std::uint8_t> dest,
               const Digest256& parent_hash, int l);

} // namespace powsim::pragthos
