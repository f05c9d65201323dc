#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace dbose {

// Philox4x32-10 (Salmon et al. 2011). Stateless: output is a pure function of (key, counter).
namespace detail {

inline constexpr std::uint32_t philox_m0 = 0xD2511F53u, philox_m1 = 0xCD9E8D57u;
inline constexpr std::uint32_t philox_w0 = 0x9E3779B9u, philox_w1 = 0xBB67AE85u;

inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
    for (int r = 0; r < 10; ++r) {
        std::uint64_t p0 = std::uint64_t(philox_m0) * c[0];
        std::uint64_t p1 = std::uint64_t(philox_m1) * c[2];
        c = {std::uint32_t(p1 >> 32) ^ c[1] ^ k[0], std::uint32_t(p1), std::uint32_t(p0 >> 32) ^ c[3] ^ k[1],
             std::uint32_t(p0)};
        k[0] += philox_w0;
        k[1] += philox_w1;
    }
    return c;
}

}  // namespace detail

// noise channels; each (seed, path, channel) is its own stream
enum class Channel : std::uint32_t {
    radial = 0,
    radial_perp = 1,
    bridge = 2,
    angular = 3,
    restart = 4,
    com = 5,
    free_base = 16,  // free particle k uses free_base + k
    init = 1024,     // initial-state sampling (verify)
};

inline Channel free_channel(int k) { return Channel(std::uint32_t(Channel::free_base) + std::uint32_t(k)); }

class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t path, Channel ch)
        : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
          hi_{std::uint32_t(path), std::uint32_t(path >> 32) ^ (std::uint32_t(ch) << 8)},
          ch_(std::uint32_t(ch)) {}

    // 64 raw bits
    std::uint64_t next_u64() {
        if (pos_ >= 2) refill();
        return buf_[pos_++];
    }

    // (0, 1), never 0 or 1
    double uniform() { return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    void refill() {
        // counter words: (block lo, block hi ^ channel, path lo, path hi ^ channel)
        std::array<std::uint32_t, 4> c{std::uint32_t(block_), std::uint32_t(block_ >> 32) ^ ch_, hi_[0], hi_[1]};
        auto o = detail::philox4x32(c, key_);
        buf_[0] = (std::uint64_t(o[0]) << 32) | o[1];
        buf_[1] = (std::uint64_t(o[2]) << 32) | o[3];
        ++block_;
        pos_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 2> hi_;
    std::uint32_t ch_;
    std::uint64_t block_ = 0;
    std::uint64_t buf_[2] = {0, 0};
    int pos_ = 2;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace dbose
