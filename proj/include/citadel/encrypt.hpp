#pragma once

#include <sodium.h>

#include <optional>
#include <vector>

#include "citadel/hash.hpp"

namespace citadel {

// Symmetric key for note payload encryption. A shared point is not a cipher
// key, so it is run through hash_fast first; a shared scalar is used as-is.
struct SymKey {
    Bytes32 bytes;

    static SymKey from_point(const GroupElement& k) {
        return {hash_fast(k.encode()).to_bytes()};
    }
    static SymKey from_scalar(const Scalar& k) { return {k.to_bytes()}; }

    bool operator==(const SymKey& o) const { return bytes == o.bytes; }
};

inline SymKey derive_symmetric_key(const GroupElement& k) { return SymKey::from_point(k); }

namespace detail {
inline std::array<uint8_t, crypto_secretbox_NONCEBYTES> secretbox_nonce(const Scalar& nonce) {
    auto nb = nonce.to_bytes();
    std::array<uint8_t, crypto_secretbox_NONCEBYTES> out;
    std::copy_n(nb.begin(), out.size(), out.begin());
    return out;
}
}  // namespace detail

// Authenticated encryption of a scalar vector (XSalsa20-Poly1305). The nonce
// is the note's nonce field; callers must not reuse one under the same key.
inline Bytes encrypt(const SymKey& key, std::span<const Scalar> plaintext,
                     const Scalar& nonce) {
    sodium_ready();
    Bytes msg;
    msg.reserve(plaintext.size() * 32);
    for (const auto& s : plaintext) {
        auto b = s.to_bytes();
        msg.insert(msg.end(), b.begin(), b.end());
    }
    auto n = detail::secretbox_nonce(nonce);
    Bytes out(msg.size() + crypto_secretbox_MACBYTES);
    crypto_secretbox_easy(out.data(), msg.data(), msg.size(), n.data(), key.bytes.data());
    return out;
}

// Fails closed: returns nothing on authentication failure, truncation, or a
// non-canonical scalar in the decrypted stream.
inline std::optional<std::vector<Scalar>> decrypt(const SymKey& key, const Bytes& ciphertext,
                                                  const Scalar& nonce) {
    sodium_ready();
    if (ciphertext.size() < crypto_secretbox_MACBYTES) return std::nullopt;
    size_t msg_len = ciphertext.size() - crypto_secretbox_MACBYTES;
    if (msg_len % 32 != 0) return std::nullopt;
    Bytes msg(msg_len);
    auto n = detail::secretbox_nonce(nonce);
    if (crypto_secretbox_open_easy(msg.data(), ciphertext.data(), ciphertext.size(), n.data(),
                                   key.bytes.data()) != 0) {
        return std::nullopt;
    }
    std::vector<Scalar> out;
    out.reserve(msg_len / 32);
    for (size_t off = 0; off < msg_len; off += 32) {
        auto s = Scalar::from_bytes(std::span(msg).subspan(off, 32));
        if (!s) return std::nullopt;
        out.push_back(*s);
    }
    return out;
}

}  // namespace citadel
