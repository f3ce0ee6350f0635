#include "powsim/hash.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <stdexcept>

namespace powsim {

namespace {

void sha256_into(std::initializer_list<std::span<const std::uint8_t>> parts, Digest256& out) {
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw std::runtime_error("EVP_MD_CTX_new failed");
    if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("EVP_DigestInit_ex failed");
    }
    for (const auto& p : parts) {
        if (!p.empty() && EVP_DigestUpdate(ctx, p.data(), p.size()) != 1) {
            EVP_MD_CTX_free(ctx);
            throw std::runtime_error("EVP_DigestUpdate failed");
        }
    }
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, out.bytes.data(), &len);
    EVP_MD_CTX_free(ctx);
}

} // namespace

std::string Digest256::hex() const {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (auto b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xF]);
    }
    return s;
}

Digest256 Digest256::from_hex(const std::string& s) {
    Digest256 d;
    if (s.size() != 64) throw std::invalid_argument("digest hex must be 64 chars");
    auto nib = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw std::invalid_argument("bad hex digit");
    };
    for (std::size_t i = 0; i < 32; ++i)
        d.bytes[i] = static_cast<std::uint8_t>(nib(s[2 * i]) << 4 | nib(s[2 * i + 1]));
    return d;
}

Digest256 sha256(std::span<const std::uint8_t> data) {
    Digest256 d;
    sha256_into({data}, d);
    return d;
}

Digest256 sha256_parts(std::initializer_list<std::span<const std::uint8_t>> parts) {
    Digest256 d;
    sha256_into(parts, d);
    return d;
}

KeyedHasher::KeyedHasher(std::uint64_t seed) {
    std::array<std::uint8_t, 8> seed_bytes;
    for (int i = 0; i < 8; ++i) seed_bytes[i] = static_cast<std::uint8_t>(seed >> (8 * i));
    key_ = sha256({seed_bytes.data(), seed_bytes.size()});
}

Digest256 KeyedHasher::digest(std::span<const std::uint8_t> m) const {
    Digest256 d;
    sha256_into({as_bytes(key_), m}, d);
    return d;
}

Digest256 KeyedHasher::digest2(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) const {
    Digest256 d;
    sha256_into({as_bytes(key_), a, b}, d);
    return d;
}

bool last_bits_equal(const Digest256& a, const Digest256& b, int bits) {
    if (bits <= 0) return true;
    if (bits > 256) bits = 256;
    int full_bytes = bits / 8;
    int rem = bits % 8;
    for (int i = 0; i < full_bytes; ++i)
        if (a.bytes[31 - i] != b.bytes[31 - i]) return false;
    if (rem) {
        const std::uint8_t mask = static_cast<std::uint8_t>((1u << rem) - 1u);
        if ((a.bytes[31 - full_bytes] & mask) != (b.bytes[31 - full_bytes] & mask)) return false;
    }
    return true;
}

} // namespace powsim
