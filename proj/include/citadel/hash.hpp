#pragma once

#include <sodium.h>

#include <string_view>
#include <vector>

#include "citadel/group.hpp"

namespace citadel {

namespace detail {

// Sponge permutation over Fq^5: substitution-permutation network with x^5
// s-boxes and a Cauchy MDS layer, 8 full rounds around 22 partial ones.
// Round constants come from BLAKE2b in counter mode.
struct SpongePermutation {
    static constexpr int WIDTH = 5;
    static constexpr int RATE = 4;
    static constexpr int FULL_ROUNDS = 8;
    static constexpr int PARTIAL_ROUNDS = 22;
    static constexpr int ROUNDS = FULL_ROUNDS + PARTIAL_ROUNDS;

    std::array<std::array<Fq, WIDTH>, ROUNDS> rc;
    std::array<std::array<Fq, WIDTH>, WIDTH> mds;

    SpongePermutation() {
        sodium_ready();
        uint32_t ctr = 0;
        for (auto& round : rc) {
            for (auto& c : round) {
                uint8_t msg[4];
                for (int i = 0; i < 4; i++) msg[i] = static_cast<uint8_t>(ctr >> (8 * i));
                ctr++;
                uint8_t wide[64];
                crypto_generichash_state st;
                crypto_generichash_init(&st, nullptr, 0, sizeof wide);
                const char* tag = "citadel/sponge/rc";
                crypto_generichash_update(&st, reinterpret_cast<const uint8_t*>(tag), 17);
                crypto_generichash_update(&st, msg, sizeof msg);
                crypto_generichash_final(&st, wide, sizeof wide);
                c = Fq::from_wide_bytes(wide);
            }
        }
        // Cauchy matrix 1/(x_i + y_j) with disjoint x, y: invertible, no
        // zero entries, every square submatrix nonsingular.
        for (int i = 0; i < WIDTH; i++) {
            for (int j = 0; j < WIDTH; j++) {
                mds[i][j] = (Fq::from_u64(i) + Fq::from_u64(WIDTH + j)).inverse();
            }
        }
    }

    static const SpongePermutation& instance() {
        static const SpongePermutation p;
        return p;
    }

    static Fq sbox(const Fq& x) {
        Fq x2 = x.square();
        return x2.square() * x;
    }

    void permute(std::array<Fq, WIDTH>& state) const {
        for (int r = 0; r < ROUNDS; r++) {
            for (int i = 0; i < WIDTH; i++) state[i] += rc[r][i];
            bool full = r < FULL_ROUNDS / 2 || r >= ROUNDS - FULL_ROUNDS / 2;
            if (full) {
                for (auto& s : state) s = sbox(s);
            } else {
                state[0] = sbox(state[0]);
            }
            std::array<Fq, WIDTH> mixed;
            for (int i = 0; i < WIDTH; i++) {
                Fq acc = mds[i][0] * state[0];
                for (int j = 1; j < WIDTH; j++) acc += mds[i][j] * state[j];
                mixed[i] = acc;
            }
            state = mixed;
        }
    }
};

// Capacity initializer binding the domain tag and input length, so
// different domains and different lengths can never collide.
inline Fq sponge_iv(std::string_view domain, uint64_t n_elems) {
    sodium_ready();
    uint8_t len[8];
    for (int i = 0; i < 8; i++) len[i] = static_cast<uint8_t>(n_elems >> (8 * i));
    uint8_t wide[64];
    crypto_generichash_state st;
    crypto_generichash_init(&st, nullptr, 0, sizeof wide);
    const char* tag = "citadel/sponge/iv";
    crypto_generichash_update(&st, reinterpret_cast<const uint8_t*>(tag), 17);
    crypto_generichash_update(&st, reinterpret_cast<const uint8_t*>(domain.data()),
                              domain.size());
    crypto_generichash_update(&st, len, sizeof len);
    crypto_generichash_final(&st, wide, sizeof wide);
    return Fq::from_wide_bytes(wide);
}

inline void flatten_into(std::vector<Fq>& v, const Fq& x) { v.push_back(x); }
inline void flatten_into(std::vector<Fq>& v, const Scalar& s) { v.push_back(s.to_fq()); }
inline void flatten_into(std::vector<Fq>& v, uint64_t n) { v.push_back(Fq::from_u64(n)); }
inline void flatten_into(std::vector<Fq>& v, const GroupElement& p) {
    auto [x, y] = p.to_affine();
    v.push_back(x);
    v.push_back(y);
}

}  // namespace detail

// Sponge hash of field elements under a domain tag; output in the scalar
// field. Points are absorbed as both affine coordinates, so the full point
// (not just an encoding) is bound.
inline Scalar hash_sponge_tagged(std::string_view domain, std::span<const Fq> elems) {
    const auto& perm = detail::SpongePermutation::instance();
    std::array<Fq, detail::SpongePermutation::WIDTH> state{};
    state[detail::SpongePermutation::WIDTH - 1] = detail::sponge_iv(domain, elems.size());
    size_t off = 0;
    do {
        size_t take = std::min<size_t>(detail::SpongePermutation::RATE, elems.size() - off);
        for (size_t i = 0; i < take; i++) state[i] += elems[off + i];
        perm.permute(state);
        off += take;
    } while (off < elems.size());
    uint8_t wide[64] = {};
    auto head = state[0].to_bytes();
    std::copy(head.begin(), head.end(), wide);
    return Scalar::from_wide_bytes(wide);
}

// Default-domain form used for the protocol formulas (nullifiers, signature
// challenges, commitments to attribute data, ...).
template <typename... Ts>
Scalar hash_sponge(const Ts&... items) {
    static_assert(sizeof...(Ts) > 0, "hash_sponge needs at least one input");
    std::vector<Fq> elems;
    (detail::flatten_into(elems, items), ...);
    return hash_sponge_tagged("", elems);
}

template <typename... Ts>
Scalar hash_sponge_in(std::string_view domain, const Ts&... items) {
    std::vector<Fq> elems;
    (detail::flatten_into(elems, items), ...);
    return hash_sponge_tagged(domain, elems);
}

// Byte-oriented hash into the scalar field (BLAKE2b-512 then wide
// reduction). Used where the input is raw bytes, not field elements:
// note-key derivation and ciphertext digests.
inline Scalar hash_fast(std::span<const uint8_t> data) {
    sodium_ready();
    uint8_t wide[64];
    crypto_generichash(wide, sizeof wide, data.data(), data.size(), nullptr, 0);
    return Scalar::from_wide_bytes(wide);
}

}  // namespace citadel
