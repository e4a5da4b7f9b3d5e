#pragma once

#include <sodium.h>

#include "citadel/field.hpp"
#include "citadel/scalar.hpp"

namespace citadel {

// Point on the embedded twisted Edwards curve -x^2 + y^2 = 1 + d*x^2*y^2
// over Fq (Jubjub parameters), restricted to the prime-order subgroup of
// order t. Internal representation is extended projective (X:Y:Z:T) with
// T = XY/Z, so addition is complete and branch-free.
//
// Canonical encoding: 32 bytes, y little-endian with the parity of x in the
// top bit. Decoding rejects non-canonical y, the (x=0, sign=1) form, points
// off the curve, and points outside the prime subgroup.
class GroupElement {
public:
    GroupElement() : x_(Fq::zero()), y_(Fq::one()), z_(Fq::one()), t_(Fq::zero()) {}

    static GroupElement identity() { return GroupElement(); }

    // d = -(10240/10241) mod q
    static const Fq& edwards_d() {
        static const Fq d = Fq::from_u64(10240).neg() * Fq::from_u64(10241).inverse();
        return d;
    }

    static GroupElement from_affine(const Fq& x, const Fq& y) {
        GroupElement p;
        p.x_ = x;
        p.y_ = y;
        p.z_ = Fq::one();
        p.t_ = x * y;
        return p;
    }

    std::pair<Fq, Fq> to_affine() const {
        Fq zinv = z_.inverse();
        return {x_ * zinv, y_ * zinv};
    }

    bool is_identity() const { return x_.is_zero() && (y_ == z_); }

    bool operator==(const GroupElement& o) const {
        // cross-multiplied comparison avoids normalization
        return (x_ * o.z_ == o.x_ * z_) && (y_ * o.z_ == o.y_ * z_);
    }
    bool operator!=(const GroupElement& o) const { return !(*this == o); }

    GroupElement operator+(const GroupElement& o) const {
        // add-2008-hwcd-3, complete for a = -1 and non-square d
        static const Fq k2d = edwards_d() + edwards_d();
        Fq a = (y_ - x_) * (o.y_ - o.x_);
        Fq b = (y_ + x_) * (o.y_ + o.x_);
        Fq c = t_ * k2d * o.t_;
        Fq d = z_ * o.z_;
        d += d;
        Fq e = b - a, f = d - c, g = d + c, h = b + a;
        GroupElement r;
        r.x_ = e * f;
        r.y_ = g * h;
        r.t_ = e * h;
        r.z_ = f * g;
        return r;
    }

    GroupElement& operator+=(const GroupElement& o) { return *this = *this + o; }

    GroupElement doubled() const {
        // dbl-2008-hwcd with a = -1
        Fq a = x_.square();
        Fq b = y_.square();
        Fq c = z_.square();
        c += c;
        Fq d = a.neg();
        Fq e = (x_ + y_).square() - a - b;
        Fq g = d + b;
        Fq f = g - c;
        Fq h = d - b;
        GroupElement r;
        r.x_ = e * f;
        r.y_ = g * h;
        r.t_ = e * h;
        r.z_ = f * g;
        return r;
    }

    GroupElement neg() const {
        GroupElement r = *this;
        r.x_ = r.x_.neg();
        r.t_ = r.t_.neg();
        return r;
    }

    // Variable-base scalar multiplication, 4-bit windows.
    GroupElement mul(const Scalar& s) const {
        GroupElement table[16];
        table[0] = identity();
        table[1] = *this;
        for (int i = 2; i < 16; i++) table[i] = table[i - 1] + *this;
        auto bytes = s.to_bytes();
        GroupElement acc = identity();
        for (int i = 31; i >= 0; i--) {
            for (int half = 1; half >= 0; half--) {
                acc = acc.doubled().doubled().doubled().doubled();
                uint8_t digit = half ? bytes[i] >> 4 : bytes[i] & 0x0f;
                if (digit) acc += table[digit];
            }
        }
        return acc;
    }

    Bytes32 encode() const {
        auto [ax, ay] = to_affine();
        Bytes32 out = ay.to_bytes();
        if (ax.is_odd()) out[31] |= 0x80;
        return out;
    }

    static std::optional<GroupElement> decode(std::span<const uint8_t> bytes) {
        if (bytes.size() != 32) return std::nullopt;
        Bytes32 ybytes;
        std::copy(bytes.begin(), bytes.end(), ybytes.begin());
        bool sign = ybytes[31] & 0x80;
        ybytes[31] &= 0x7f;
        auto y = Fq::from_bytes(ybytes);
        if (!y) return std::nullopt;

        // x^2 = (y^2 - 1) / (d*y^2 + 1)
        Fq yy = y->square();
        Fq denom = edwards_d() * yy + Fq::one();
        if (denom.is_zero()) return std::nullopt;
        Fq xx = (yy - Fq::one()) * denom.inverse();
        auto x = fq_sqrt(xx);
        if (!x) return std::nullopt;
        if (x->is_zero()) {
            if (sign) return std::nullopt;
        } else if (x->is_odd() != sign) {
            *x = x->neg();
        }
        GroupElement p = from_affine(*x, *y);
        if (!p.in_prime_subgroup()) return std::nullopt;
        return p;
    }

    bool on_curve() const {
        auto [ax, ay] = to_affine();
        Fq xx = ax.square(), yy = ay.square();
        return yy - xx == Fq::one() + edwards_d() * xx * yy;
    }

    bool in_prime_subgroup() const {
        static const Scalar order_minus_one = [] {
            // t-1 as a scalar: 0 - 1 in F_t
            return Scalar::zero() - Scalar::one();
        }();
        // t*P == id  <=>  (t-1)*P == -P
        return mul(order_minus_one) == neg();
    }

    // Deterministic hash-to-group: try-and-increment on y, then clear the
    // cofactor. Output is never the identity.
    static GroupElement hash_to_group(std::string_view tag) {
        sodium_ready();
        for (uint32_t ctr = 0;; ctr++) {
            uint8_t msg[4];
            for (int i = 0; i < 4; i++) msg[i] = static_cast<uint8_t>(ctr >> (8 * i));
            crypto_generichash_state st;
            crypto_generichash_init(&st, nullptr, 0, 64);
            crypto_generichash_update(&st, reinterpret_cast<const uint8_t*>(tag.data()),
                                      tag.size());
            crypto_generichash_update(&st, msg, sizeof msg);
            uint8_t wide[64];
            crypto_generichash_final(&st, wide, sizeof wide);
            Fq y = Fq::from_wide_bytes(wide);

            Fq yy = y.square();
            Fq denom = edwards_d() * yy + Fq::one();
            if (denom.is_zero()) continue;
            Fq xx = (yy - Fq::one()) * denom.inverse();
            auto x = fq_sqrt(xx);
            if (!x) continue;
            GroupElement p = from_affine(*x, y);
            // cofactor 8
            p = p.doubled().doubled().doubled();
            if (p.is_identity()) continue;
            return p;
        }
    }

private:
    Fq x_, y_, z_, t_;
};

namespace detail {

// Fixed-base table: radix-16 decomposition, one stored multiple per
// (window, digit) pair, so a multiplication is 63 additions and no doubles.
class FixedBaseTable {
public:
    explicit FixedBaseTable(const GroupElement& base) {
        GroupElement window_base = base;
        for (int w = 0; w < 63; w++) {
            GroupElement acc = window_base;
            for (int d = 1; d <= 15; d++) {
                mult_[w][d - 1] = acc;
                acc += window_base;
            }
            window_base = window_base.doubled().doubled().doubled().doubled();
        }
    }

    GroupElement mul(const Scalar& s) const {
        auto bytes = s.to_bytes();
        GroupElement acc = GroupElement::identity();
        for (int w = 0; w < 63; w++) {
            uint8_t byte = bytes[w / 2];
            uint8_t digit = (w % 2) ? byte >> 4 : byte & 0x0f;
            if (digit) acc += mult_[w][digit - 1];
        }
        return acc;
    }

private:
    GroupElement mult_[63][15];
};

}  // namespace detail

// Protocol-wide generators, derived from fixed domain tags so every build
// agrees on them. No party knows the discrete log relation between the two.
inline const GroupElement& generator() {
    static const GroupElement g = GroupElement::hash_to_group("citadel/v1/generator/G");
    return g;
}

inline const GroupElement& generator_prime() {
    static const GroupElement g = GroupElement::hash_to_group("citadel/v1/generator/G-prime");
    return g;
}

// s*G and s*G' via precomputed tables; these two bases dominate the protocol.
inline GroupElement mul_gen(const Scalar& s) {
    static const detail::FixedBaseTable table(generator());
    return table.mul(s);
}

inline GroupElement mul_gen_prime(const Scalar& s) {
    static const detail::FixedBaseTable table(generator_prime());
    return table.mul(s);
}

}  // namespace citadel
