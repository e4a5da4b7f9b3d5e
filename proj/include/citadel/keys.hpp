#pragma once

#include <optional>
#include <stdexcept>

#include "citadel/hash.hpp"
#include "citadel/rng.hpp"

namespace citadel {

struct PublicKey {
    GroupElement a;  // A = a*G
    GroupElement b;  // B = b*G

    bool operator==(const PublicKey& o) const { return a == o.a && b == o.b; }
};

struct StaticKeys {
    Scalar a;
    Scalar b;
    PublicKey pk;
};

// Scanning capability: enough to recognize incoming notes, not to spend them.
struct ViewKey {
    Scalar a;
    GroupElement big_b;
};

// One-time keys attached to a note. R is published so the receiver can
// rebuild k_dh; k_dh itself never leaves the two parties.
struct NoteKeyPair {
    GroupElement npk;
    GroupElement r;
    GroupElement k_dh;
};

struct NoteSecretKey {
    Scalar nsk;
    GroupElement npk_prime;  // nsk*G', the nullification key
};

inline StaticKeys gen_static_keys(Rng& rng) {
    Scalar a = Scalar::random_nonzero(rng);
    Scalar b = Scalar::random_nonzero(rng);
    return {a, b, {mul_gen(a), mul_gen(b)}};
}

inline ViewKey view_key(const StaticKeys& sk) { return {sk.a, sk.pk.b}; }

// npk = H_fast(enc(r*A))*G + B, R = r*G. The ephemeral r is handed back to
// the sender for payload encryption and must be discarded afterwards.
inline std::pair<NoteKeyPair, Scalar> gen_note_keypair(const PublicKey& pk, Rng& rng) {
    if (pk.a.is_identity() || pk.b.is_identity()) {
        throw std::invalid_argument("receiver public key contains the identity");
    }
    Scalar r = Scalar::random_nonzero(rng);
    GroupElement k_dh = pk.a.mul(r);
    Scalar h = hash_fast(k_dh.encode());
    return {{mul_gen(h) + pk.b, mul_gen(r), k_dh}, r};
}

// Receiver-side check that a note with the given (npk, R) is addressed to
// this view key.
inline bool note_addressed_to(const ViewKey& vk, const GroupElement& npk,
                              const GroupElement& big_r) {
    GroupElement k_dh = big_r.mul(vk.a);
    Scalar h = hash_fast(k_dh.encode());
    return npk == mul_gen(h) + vk.big_b;
}

// nsk = H_fast(enc(a*R)) + b. Returns nothing when npk does not match, i.e.
// the note is not addressed to these keys.
inline std::optional<NoteSecretKey> recover_note_secret(const StaticKeys& sk,
                                                        const GroupElement& npk,
                                                        const GroupElement& big_r) {
    GroupElement k_dh = big_r.mul(sk.a);
    Scalar h = hash_fast(k_dh.encode());
    if (npk != mul_gen(h) + sk.pk.b) return std::nullopt;
    Scalar nsk = h + sk.b;
    return NoteSecretKey{nsk, mul_gen_prime(nsk)};
}

}  // namespace citadel
