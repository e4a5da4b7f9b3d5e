#pragma once

#include "citadel/hash.hpp"
#include "citadel/rng.hpp"

namespace citadel {

// Schnorr signature (R, u): u = r - c*sk with challenge c = hash_sponge(m, R).
// The challenge hash is the sponge so the verification equation stays inside
// the field/group language the relation checkers speak.
struct Signature {
    GroupElement r;
    Scalar u;
};

// Double-key variant binding the same sk under both generators:
// R = r*G, R' = r*G', c = hash_sponge(m, R, R'), u = r - c*sk.
struct DoubleSignature {
    GroupElement r;
    GroupElement r_prime;
    Scalar u;
};

inline Signature sign_single(const Scalar& sk, const Scalar& m, Rng& rng) {
    Scalar r = Scalar::random_nonzero(rng);
    GroupElement big_r = mul_gen(r);
    Scalar c = hash_sponge(m, big_r);
    return {big_r, r - c * sk};
}

inline bool verify_single(const GroupElement& pk, const Scalar& m, const Signature& sig) {
    Scalar c = hash_sponge(m, sig.r);
    return sig.r == mul_gen(sig.u) + pk.mul(c);
}

inline DoubleSignature sign_double(const Scalar& sk, const Scalar& m, Rng& rng) {
    Scalar r = Scalar::random_nonzero(rng);
    GroupElement big_r = mul_gen(r);
    GroupElement big_r_prime = mul_gen_prime(r);
    Scalar c = hash_sponge(m, big_r, big_r_prime);
    return {big_r, big_r_prime, r - c * sk};
}

inline bool verify_double(const GroupElement& pk, const GroupElement& pk_prime,
                          const Scalar& m, const DoubleSignature& sig) {
    Scalar c = hash_sponge(m, sig.r, sig.r_prime);
    return sig.r == mul_gen(sig.u) + pk.mul(c) &&
           sig.r_prime == mul_gen_prime(sig.u) + pk_prime.mul(c);
}

}  // namespace citadel
