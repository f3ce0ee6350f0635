#include "powsim/pragthos.hpp"

#include <cmath>

namespace powsim::pragthos {

ThresholdGap k_th_compute(double beta_hon, int rho, double mu) {
    if (!(beta_hon > 0.0 && beta_hon < 0.5))
        fail(Errc::DegeneratePhi, "need 0 < beta_hon < 1/2 so the coalition can overtake");
    if (!(mu > 0.0 && mu <= 1.0)) fail(Errc::DegenerateInput, "mu in (0,1]");
    if (rho < 1) fail(Errc::DegenerateInput, "rho must be >= 1");
    const double phi = beta_hon / (1.0 - beta_hon);
    const double arg = mu + std::pow(phi, rho) * (1.0 - mu);
    const double exact = static_cast<double>(rho) - std::log(arg) / std::log(phi);
    return {exact, static_cast<long>(std::floor(exact + 1e-12))};
}

std::pair<PoICommit, std::vector<std::uint8_t>> make_poi(Rng& rng, const KeyedHasher& hasher,
                                                         const Digest256& honest_tip_digest,
                                                         Height height) {
    std::vector<std::uint8_t> secret(32);
    rng.fill_bytes(secret);
    PoICommit c;
    c.commitment = hasher.digest2(as_bytes(honest_tip_digest), as_bytes(secret));
    c.committed_height = height;
    return {c, secret};
}

PoIVerdict verify_poi_reveal(const PoICommit& commit, const PoIReveal& reveal,
                             const ChainTree& tree, const BlockId& accused_tip, long k_th,
                             const KeyedHasher& hasher) {
    // the commit must actually appear as a tx on the accused chain
    bool found = false;
    {
        const Block* cur = &tree.block(accused_tip);
        for (;;) {
            if (cur->height == reveal.placement_height) {
                for (const auto& tx : cur->txs) {
                    if (tx.payload.size() == 32 &&
                        std::equal(tx.payload.begin(), tx.payload.end(),
                                   commit.commitment.bytes.begin())) {
                        found = true;
                        break;
                    }
                }
                break;
            }
            if (cur->height < reveal.placement_height || cur->id == tree.genesis()) break;
            cur = &tree.block(cur->parent);
        }
    }
    if (!found)
        fail(Errc::UnknownCommit, "no commit tx at height " + std::to_string(reveal.placement_height) +
                                      " on the accused chain");

    if (!tree.contains(reveal.referenced_block)) return PoIVerdict::Invalid;
    const Block& ref = tree.block(reveal.referenced_block);
    if (ref.height < commit.committed_height) return PoIVerdict::Invalid;

    const Digest256 expect = hasher.digest2(as_bytes(ref.id.v), as_bytes(reveal.m_secret));
    if (expect != commit.commitment) return PoIVerdict::Invalid;

    // placement must sit k_th below the referenced block; an attacker on a
    // shorter chain cannot reference anything high enough to pass this.
    if (reveal.placement_height > commit.committed_height - k_th) return PoIVerdict::Invalid;
    return PoIVerdict::ValidInvalidation;
}

PoiInclusion poi_inclusion_probability(double beta_hon, long k_th) {
    if (!(beta_hon >= 0.0 && beta_hon <= 1.0)) fail(Errc::DegenerateInput, "beta_hon in [0,1]");
    if (k_th < 0) fail(Errc::DegenerateInput, "k_th must be >= 0");
    PoiInclusion p;
    p.exact = 1.0 - std::pow(1.0 - beta_hon, static_cast<double>(k_th));
    p.lower_bound = 1.0 - std::exp(-beta_hon * static_cast<double>(k_th));
    return p;
}

bool c1_filter(const KeyedHasher& hasher, std::span<const std::uint8_t> tx_wire,
               std::span<const std::uint8_t> dest, const Digest256& parent_hash, int l) {
    if (l < 0) fail(Errc::DegenerateInput, "l must be >= 0");
    if (l == 0) return true;
    const Digest256 h_tx = hasher.digest2(tx_wire, as_bytes(parent_hash));
    const Digest256 h_dest = hasher.digest2(dest, as_bytes(parent_hash));
    return last_bits_equal(h_tx, h_dest, l);
}

bool c1_filter(const KeyedHasher& hasher, const Transaction& tx, std::span<const std::uint8_t> dest,
               const Digest256& parent_hash, int l) {
    const auto wire = tx.wire_bytes();
    return c1_filter(hasher, std::span<const std::uint8_t>(wire), dest, parent_hash, l);
}

} // namespace powsim::pragthos
