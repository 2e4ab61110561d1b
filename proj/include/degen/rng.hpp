#pragma once

// Counter-based random streams (Philox4x32-10). A stream is addressed by
// (seed, path index), so every Monte Carlo path draws the same numbers no
// matter which thread runs it or in what order.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace degen {

class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            ctr = single_round(ctr, key);
            key[0] += kWeylA;
            key[1] += kWeylB;
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMulA = 0xD2511F53u;
    static constexpr std::uint32_t kMulB = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeylA = 0x9E3779B9u;
    static constexpr std::uint32_t kWeylB = 0xBB67AE85u;

    static Counter single_round(const Counter& c, const Key& k) {
        std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * c[0];
        std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * c[2];
        auto hi = [](std::uint64_t p) { return static_cast<std::uint32_t>(p >> 32); };
        auto lo = [](std::uint64_t p) { return static_cast<std::uint32_t>(p); };
        return {hi(p1) ^ c[1] ^ k[0], lo(p1), hi(p0) ^ c[3] ^ k[1], lo(p0)};
    }
};

/// splitmix64 finalizer; used to spread user seeds over the Philox key.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t path, std::uint64_t stream = 0) {
        std::uint64_t k = mix64(seed ^ mix64(stream + 0x5851F42D4C957F2Dull));
        key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
        ctr_ = {0u, 0u, static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
    }

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform() {
        if (pos_ >= 4) refill();
        std::uint64_t hi = block_[pos_++];
        std::uint64_t lo = block_[pos_++];
        std::uint64_t bits = ((hi << 32) | lo) >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal (Box-Muller, both outputs used).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double th = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(th);
        have_spare_ = true;
        return r * std::cos(th);
    }

private:
    void refill() {
        block_ = Philox4x32::generate(ctr_, key_);
        if (++ctr_[0] == 0) ++ctr_[1];
        pos_ = 0;
    }

    Philox4x32::Key key_{};
    Philox4x32::Counter ctr_{};
    Philox4x32::Counter block_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace degen
