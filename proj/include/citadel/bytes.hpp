#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace citadel {

using Bytes = std::vector<uint8_t>;
using Bytes32 = std::array<uint8_t, 32>;

inline std::string to_hex(std::span<const uint8_t> data) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (uint8_t b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

inline std::optional<Bytes> from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) return std::nullopt;
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    Bytes out;
    out.reserve(hex.size() / 2);
    for (size_t i = 0; i < hex.size(); i += 2) {
        int hi = nibble(hex[i]), lo = nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out.push_back(static_cast<uint8_t>(hi << 4 | lo));
    }
    return out;
}

// Little-endian binary writer for the canonical wire formats.
class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v) {
        for (int i = 0; i < 2; i++) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; i++) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; i++) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void raw(std::span<const uint8_t> data) { buf_.insert(buf_.end(), data.begin(), data.end()); }
    void bytes(std::span<const uint8_t> data) {
        u32(static_cast<uint32_t>(data.size()));
        raw(data);
    }
    const Bytes& out() const { return buf_; }
    Bytes take() { return std::move(buf_); }

private:
    Bytes buf_;
};

// Matching reader; throws on truncation so corrupt inputs fail loudly.
class ByteReader {
public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    uint8_t u8() { return take(1)[0]; }
    uint16_t u16() {
        auto s = take(2);
        return static_cast<uint16_t>(s[0]) | static_cast<uint16_t>(s[1]) << 8;
    }
    uint32_t u32() {
        auto s = take(4);
        uint32_t v = 0;
        for (int i = 3; i >= 0; i--) v = v << 8 | s[i];
        return v;
    }
    uint64_t u64() {
        auto s = take(8);
        uint64_t v = 0;
        for (int i = 7; i >= 0; i--) v = v << 8 | s[i];
        return v;
    }
    Bytes bytes() {
        uint32_t n = u32();
        auto s = take(n);
        return Bytes(s.begin(), s.end());
    }
    std::span<const uint8_t> take(size_t n) {
        if (n > data_.size() - pos_) throw std::runtime_error("truncated input");
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    Bytes32 take32() {
        auto s = take(32);
        Bytes32 out;
        std::memcpy(out.data(), s.data(), 32);
        return out;
    }
    bool done() const { return pos_ == data_.size(); }
    size_t remaining() const { return data_.size() - pos_; }

private:
    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

}  // namespace citadel
