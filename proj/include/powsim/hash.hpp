#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace powsim {

/// 256-bit digest value type. Used for block ids, tx ids and commitments.
struct Digest256 {
    std::array<std::uint8_t, 32> bytes{};

    auto operator<=>(const Digest256&) const = default;

    bool is_zero() const {
        for (auto b : bytes)
            if (b != 0) return false;
        return true;
    }

    std::string hex() const;
    static Digest256 from_hex(const std::string& s);
};

/// SHA-256 of a byte span (OpenSSL-backed).
Digest256 sha256(std::span<const std::uint8_t> data);

/// SHA-256 over the concatenation of several parts.
Digest256 sha256_parts(std::initializer_list<std::span<const std::uint8_t>> parts);

/**
 * Keyed hash: H_k(m) = SHA-256(key || m). The key is derived from the run
 * seed so commitments and the tx-inclusion filter are reproducible per run
 * while still behaving like a fresh random oracle across seeds.
 */
class KeyedHasher {
public:
    KeyedHasher() = default;
    explicit KeyedHasher(std::uint64_t seed);

    Digest256 digest(std::span<const std::uint8_t> m) const;
    Digest256 digest2(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) const;

    const Digest256& key() const { return key_; }

private:
    Digest256 key_{};
};

/// True iff the last `bits` bits of a and b agree.
bool last_bits_equal(const Digest256& a, const Digest256& b, int bits);

inline std::span<const std::uint8_t> as_bytes(const Digest256& d) {
    return {d.bytes.data(), d.bytes.size()};
}

inline std::span<const std::uint8_t> as_bytes(const std::string& s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline std::span<const std::uint8_t> as_bytes(const std::vector<std::uint8_t>& v) {
    return {v.data(), v.size()};
}

} // namespace powsim

template <>
struct std::hash<powsim::Digest256> {
    std::size_t operator()(const powsim::Digest256& d) const noexcept {
        std::size_t h;
        static_assert(sizeof(h) <= 32);
        std::memcpy(&h, d.bytes.data(), sizeof(h));
        return h;
    }
};
