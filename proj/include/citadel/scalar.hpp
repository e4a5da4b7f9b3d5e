#pragma once

#include "citadel/field.hpp"
#include "citadel/rng.hpp"

namespace citadel {

// Element of the scalar field F_t (t = order of the curve's prime subgroup).
// Canonical encoding is exactly 32 bytes little-endian; non-canonical
// encodings are rejected on decode.
class Scalar {
public:
    constexpr Scalar() = default;

    static constexpr Scalar zero() { return Scalar(Ft::zero()); }
    static constexpr Scalar one() { return Scalar(Ft::one()); }
    static constexpr Scalar from_u64(uint64_t v) { return Scalar(Ft::from_u64(v)); }

    static std::optional<Scalar> from_bytes(std::span<const uint8_t> bytes) {
        auto f = Ft::from_bytes(bytes);
        if (!f) return std::nullopt;
        return Scalar(*f);
    }

    static Scalar from_wide_bytes(std::span<const uint8_t> bytes64) {
        return Scalar(Ft::from_wide_bytes(bytes64));
    }

    static Scalar random(Rng& rng) {
        uint8_t wide[64];
        rng.fill(wide);
        return from_wide_bytes(wide);
    }

    static Scalar random_nonzero(Rng& rng) {
        for (;;) {
            Scalar s = random(rng);
            if (!s.is_zero()) return s;
        }
    }

    Bytes32 to_bytes() const { return f_.to_bytes(); }

    Scalar operator+(const Scalar& o) const { return Scalar(f_ + o.f_); }
    Scalar operator-(const Scalar& o) const { return Scalar(f_ - o.f_); }
    Scalar operator*(const Scalar& o) const { return Scalar(f_ * o.f_); }
    Scalar& operator+=(const Scalar& o) { f_ += o.f_; return *this; }
    Scalar& operator-=(const Scalar& o) { f_ -= o.f_; return *this; }
    Scalar& operator*=(const Scalar& o) { f_ *= o.f_; return *this; }
    Scalar neg() const { return Scalar(f_.neg()); }
    Scalar inverse() const { return Scalar(f_.inverse()); }

    bool operator==(const Scalar& o) const { return f_ == o.f_; }
    bool operator!=(const Scalar& o) const { return f_ != o.f_; }
    bool is_zero() const { return f_.is_zero(); }
    bool less_than(const Scalar& o) const { return f_.less_than(o.f_); }

    // Canonical value if it fits 64 bits (used for amounts and positions).
    std::optional<uint64_t> to_u64() const {
        auto raw = f_.canonical();
        if (raw[1] | raw[2] | raw[3]) return std::nullopt;
        return raw[0];
    }

    // True iff the canonical value is below 2^62 (the amount range cap).
    bool fits_value_range() const {
        auto raw = f_.canonical();
        return (raw[1] | raw[2] | raw[3]) == 0 && raw[0] < (1ull << 62);
    }

    // Embeds into the curve's base field (t < q, so this is injective).
    Fq to_fq() const {
        auto b = to_bytes();
        return *Fq::from_bytes(b);
    }

    const Ft& raw() const { return f_; }

private:
    explicit constexpr Scalar(const Ft& f) : f_(f) {}
    Ft f_;
};

struct ScalarLess {
    bool operator()(const Scalar& a, const Scalar& b) const { return a.less_than(b); }
};

inline Scalar value_scalar(uint64_t v) { return Scalar::from_u64(v); }

}  // namespace citadel
