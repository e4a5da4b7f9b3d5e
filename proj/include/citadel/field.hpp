#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "citadel/bytes.hpp"

namespace citadel {

namespace detail {

using u64 = uint64_t;
using u128 = unsigned __int128;
using Limbs = std::array<u64, 4>;

// r = a + b, returns carry
constexpr u64 add_limbs(Limbs& r, const Limbs& a, const Limbs& b) {
    u128 c = 0;
    for (int i = 0; i < 4; i++) {
        u128 s = static_cast<u128>(a[i]) + b[i] + c;
        r[i] = static_cast<u64>(s);
        c = s >> 64;
    }
    return static_cast<u64>(c);
}

// r = a - b, returns borrow
constexpr u64 sub_limbs(Limbs& r, const Limbs& a, const Limbs& b) {
    u64 borrow = 0;
    for (int i = 0; i < 4; i++) {
        u128 s = static_cast<u128>(a[i]) - b[i] - borrow;
        r[i] = static_cast<u64>(s);
        borrow = (s >> 64) ? 1 : 0;
    }
    return borrow;
}

constexpr bool geq(const Limbs& a, const Limbs& b) {
    for (int i = 3; i >= 0; i--) {
        if (a[i] != b[i]) return a[i] > b[i];
    }
    return true;
}

constexpr bool is_zero_limbs(const Limbs& a) { return (a[0] | a[1] | a[2] | a[3]) == 0; }

// -m^{-1} mod 2^64 for odd m (Newton iteration)
constexpr u64 mont_inv(u64 m0) {
    u64 x = 1;
    for (int i = 0; i < 6; i++) x *= 2 - m0 * x;
    return ~x + 1;
}

// 2^512 mod m, by doubling 1 512 times
constexpr Limbs compute_r2(const Limbs& m) {
    Limbs r{1, 0, 0, 0};
    for (int i = 0; i < 512; i++) {
        Limbs d{};
        u64 carry = add_limbs(d, r, r);
        if (carry || geq(d, m)) sub_limbs(d, d, m);
        r = d;
    }
    return r;
}

// CIOS Montgomery multiplication: r = a*b*2^{-256} mod m. Inputs < m.
constexpr void mont_mul(Limbs& r, const Limbs& a, const Limbs& b, const Limbs& m, u64 inv) {
    u64 t[6] = {0, 0, 0, 0, 0, 0};
    for (int i = 0; i < 4; i++) {
        u128 c = 0;
        for (int j = 0; j < 4; j++) {
            u128 s = static_cast<u128>(t[j]) + static_cast<u128>(a[i]) * b[j] + c;
            t[j] = static_cast<u64>(s);
            c = s >> 64;
        }
        u128 s4 = static_cast<u128>(t[4]) + c;
        t[4] = static_cast<u64>(s4);
        t[5] = static_cast<u64>(s4 >> 64);

        u64 k = t[0] * inv;
        c = (static_cast<u128>(t[0]) + static_cast<u128>(k) * m[0]) >> 64;
        for (int j = 1; j < 4; j++) {
            u128 s = static_cast<u128>(t[j]) + static_cast<u128>(k) * m[j] + c;
            t[j - 1] = static_cast<u64>(s);
            c = s >> 64;
        }
        u128 s = static_cast<u128>(t[4]) + c;
        t[3] = static_cast<u64>(s);
        t[4] = t[5] + static_cast<u64>(s >> 64);
        t[5] = 0;
    }
    Limbs res{t[0], t[1], t[2], t[3]};
    if (t[4] || geq(res, m)) sub_limbs(res, res, m);
    r = res;
}

}  // namespace detail

// Prime field element in Montgomery form. Params supplies the modulus;
// everything else is derived at compile time.
template <typename Params>
class Fp {
public:
    using Limbs = detail::Limbs;
    static constexpr Limbs MODULUS = Params::MODULUS;
    static constexpr detail::u64 INV = detail::mont_inv(Params::MODULUS[0]);
    static constexpr Limbs R2 = detail::compute_r2(Params::MODULUS);

    constexpr Fp() : v_{0, 0, 0, 0} {}

    static constexpr Fp zero() { return Fp(); }
    static constexpr Fp one() { return from_u64(1); }

    static constexpr Fp from_u64(uint64_t x) {
        Fp out;
        Limbs raw{x, 0, 0, 0};
        detail::mont_mul(out.v_, raw, R2, MODULUS, INV);
        return out;
    }

    // Canonical 32-byte little-endian encoding; rejects values >= modulus.
    static std::optional<Fp> from_bytes(std::span<const uint8_t> bytes) {
        if (bytes.size() != 32) return std::nullopt;
        Limbs raw{};
        for (int i = 0; i < 4; i++) {
            for (int j = 7; j >= 0; j--) raw[i] = raw[i] << 8 | bytes[i * 8 + j];
        }
        if (detail::geq(raw, MODULUS)) return std::nullopt;
        Fp out;
        detail::mont_mul(out.v_, raw, R2, MODULUS, INV);
        return out;
    }

    // 64 bytes little-endian, reduced mod m; used for unbiased hash-to-field.
    static Fp from_wide_bytes(std::span<const uint8_t> bytes64) {
        Limbs lo{}, hi{};
        for (int i = 0; i < 4; i++) {
            for (int j = 7; j >= 0; j--) {
                lo[i] = lo[i] << 8 | bytes64[i * 8 + j];
                hi[i] = hi[i] << 8 | bytes64[32 + i * 8 + j];
            }
        }
        reduce_once(lo);
        reduce_once(hi);
        static const Limbs R3 = [] {
            Limbs r;
            detail::mont_mul(r, R2, R2, MODULUS, INV);
            return r;
        }();
        Fp a, b;
        detail::mont_mul(a.v_, lo, R2, MODULUS, INV);
        detail::mont_mul(b.v_, hi, R3, MODULUS, INV);
        return a + b;
    }

    Bytes32 to_bytes() const {
        Limbs raw = canonical();
        Bytes32 out;
        for (int i = 0; i < 4; i++) {
            for (int j = 0; j < 8; j++) out[i * 8 + j] = static_cast<uint8_t>(raw[i] >> (8 * j));
        }
        return out;
    }

    constexpr Fp operator+(const Fp& o) const {
        Fp r;
        detail::u64 carry = detail::add_limbs(r.v_, v_, o.v_);
        if (carry || detail::geq(r.v_, MODULUS)) detail::sub_limbs(r.v_, r.v_, MODULUS);
        return r;
    }

    constexpr Fp operator-(const Fp& o) const {
        Fp r;
        if (detail::sub_limbs(r.v_, v_, o.v_)) detail::add_limbs(r.v_, r.v_, MODULUS);
        return r;
    }

    constexpr Fp operator*(const Fp& o) const {
        Fp r;
        detail::mont_mul(r.v_, v_, o.v_, MODULUS, INV);
        return r;
    }

    constexpr Fp neg() const { return zero() - *this; }
    constexpr Fp square() const { return *this * *this; }
    Fp& operator+=(const Fp& o) { return *this = *this + o; }
    Fp& operator-=(const Fp& o) { return *this = *this - o; }
    Fp& operator*=(const Fp& o) { return *this = *this * o; }

    constexpr bool operator==(const Fp& o) const { return v_ == o.v_; }
    constexpr bool operator!=(const Fp& o) const { return v_ != o.v_; }

    constexpr bool is_zero() const { return detail::is_zero_limbs(v_); }

    bool is_odd() const { return canonical()[0] & 1; }

    // Total order on canonical representatives (for std::map/set keys).
    bool less_than(const Fp& o) const {
        Limbs a = canonical(), b = o.canonical();
        for (int i = 3; i >= 0; i--) {
            if (a[i] != b[i]) return a[i] < b[i];
        }
        return false;
    }

    Fp pow(const Limbs& exp) const {
        Fp base = *this, acc = one();
        for (int limb = 0; limb < 4; limb++) {
            for (int bit = 0; bit < 64; bit++) {
                if (exp[limb] >> bit & 1) acc *= base;
                base = base.square();
            }
        }
        return acc;
    }

    // Fermat inverse; inverse of zero is zero.
    Fp inverse() const {
        Limbs e = MODULUS;
        detail::sub_limbs(e, e, Limbs{2, 0, 0, 0});
        return pow(e);
    }

    Limbs canonical() const {
        Limbs raw;
        detail::mont_mul(raw, v_, Limbs{1, 0, 0, 0}, MODULUS, INV);
        return raw;
    }

private:
    static constexpr void reduce_once(Limbs& x) {
        while (detail::geq(x, MODULUS)) detail::sub_limbs(x, x, MODULUS);
    }

    Limbs v_;
};

// Base field of the embedded curve: the 255-bit BLS12-381 scalar field prime.
struct BaseFieldParams {
    static constexpr detail::Limbs MODULUS = {0xffffffff00000001ull, 0x53bda402fffe5bfeull,
                                              0x3339d80809a1d805ull, 0x73eda753299d7d48ull};
};

// Scalar field: the 252-bit prime order of the curve's large subgroup.
struct ScalarFieldParams {
    static constexpr detail::Limbs MODULUS = {0xd0970e5ed6f72cb7ull, 0xa6682093ccc81082ull,
                                              0x06673b0101343b00ull, 0x0e7db4ea6533afa9ull};
};

using Fq = Fp<BaseFieldParams>;
using Ft = Fp<ScalarFieldParams>;

// Tonelli-Shanks square root in Fq (q-1 has 2-adicity 32).
// Returns nullopt if a is a non-residue.
inline std::optional<Fq> fq_sqrt(const Fq& a) {
    if (a.is_zero()) return Fq::zero();

    // odd part m and 2-adicity s of q-1
    static const auto decomposed = [] {
        detail::Limbs m = Fq::MODULUS;
        detail::sub_limbs(m, m, detail::Limbs{1, 0, 0, 0});
        int s = 0;
        while ((m[0] & 1) == 0) {
            for (int i = 0; i < 3; i++) m[i] = m[i] >> 1 | m[i + 1] << 63;
            m[3] >>= 1;
            s++;
        }
        return std::pair{m, s};
    }();
    static const auto [odd, twoadicity] = decomposed;

    static const detail::Limbs half = [] {
        detail::Limbs e = Fq::MODULUS;
        detail::sub_limbs(e, e, detail::Limbs{1, 0, 0, 0});
        for (int i = 0; i < 3; i++) e[i] = e[i] >> 1 | e[i + 1] << 63;
        e[3] >>= 1;
        return e;
    }();

    if (a.pow(half) != Fq::one()) return std::nullopt;

    // smallest quadratic non-residue, found once
    static const Fq nonresidue = [&] {
        for (uint64_t z = 2;; z++) {
            Fq c = Fq::from_u64(z);
            if (c.pow(half) != Fq::one()) return c;
        }
    }();

    detail::Limbs e = odd;
    detail::u64 carry = detail::add_limbs(e, e, detail::Limbs{1, 0, 0, 0});
    (void)carry;
    for (int i = 0; i < 3; i++) e[i] = e[i] >> 1 | e[i + 1] << 63;
    e[3] >>= 1;

    Fq x = a.pow(e);           // a^{(m+1)/2}
    Fq b = a.pow(odd);         // a^m
    Fq g = nonresidue.pow(odd);
    int r = twoadicity;

    while (b != Fq::one()) {
        int m = 0;
        Fq t = b;
        while (t != Fq::one()) {
            t = t.square();
            m++;
            if (m == r) return std::nullopt;
        }
        Fq gs = g;
        for (int i = 0; i < r - m - 1; i++) gs = gs.square();
        x *= gs;
        g = gs.square();
        b *= g;
        r = m;
    }
    return x;
}

}  // namespace citadel
