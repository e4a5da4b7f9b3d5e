#pragma once

#include <sodium.h>

#include <cstdint>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string_view>

namespace citadel {

inline void sodium_ready() {
    static const int rc = [] { return sodium_init(); }();
    if (rc < 0) throw std::runtime_error("libsodium initialization failed");
}

// Randomness source. Key generation, blinders and nonces all draw from here,
// so tests can inject a seeded stream and stay reproducible.
class Rng {
public:
    virtual ~Rng() = default;
    virtual void fill(std::span<uint8_t> out) = 0;
};

class SystemRng final : public Rng {
public:
    SystemRng() { sodium_ready(); }
    void fill(std::span<uint8_t> out) override { randombytes_buf(out.data(), out.size()); }
};

// Deterministic stream cipher RNG for tests and fixture generation.
class SeededRng final : public Rng {
public:
    explicit SeededRng(uint64_t seed) {
        sodium_ready();
        uint8_t seedbuf[randombytes_SEEDBYTES] = {};
        for (int i = 0; i < 8; i++) seedbuf[i] = static_cast<uint8_t>(seed >> (8 * i));
        seed_ = *reinterpret_cast<std::array<uint8_t, randombytes_SEEDBYTES>*>(seedbuf);
    }

    void fill(std::span<uint8_t> out) override {
        // randombytes_buf_deterministic is a pure function of (seed, len);
        // chain the seed forward so successive calls are independent.
        randombytes_buf_deterministic(out.data(), out.size(), seed_.data());
        std::array<uint8_t, randombytes_SEEDBYTES> next;
        crypto_generichash(next.data(), next.size(), seed_.data(), seed_.size(), nullptr, 0);
        seed_ = next;
    }

private:
    std::array<uint8_t, randombytes_SEEDBYTES> seed_;
};

}  // namespace citadel
