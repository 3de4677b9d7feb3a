#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace mmv {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). The output
// block is a pure function of (counter, key), so any draw of any stream can
// be reproduced without replaying the ones before it.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter block(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kW0;
                key[1] += kW1;
            }
            const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57;
    static constexpr std::uint32_t kW0 = 0x9E3779B9;
    static constexpr std::uint32_t kW1 = 0xBB67AE85;
};

/// Random stream for one (seed, stream id) pair. The j-th Philox block of
/// the stream uses counter (j_lo, j_hi, id_lo, id_hi) and key seed, so
/// streams never overlap and do not depend on the order they are consumed.
class StreamRng {
public:
    StreamRng(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_lo_(static_cast<std::uint32_t>(stream)),
          stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform() noexcept {
        if (buffered_ == 0) {
            refill();
        }
        const std::uint64_t bits = buffer_[--buffered_];
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal by Box-Muller; the second variate is cached.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double radius = std::sqrt(-2.0 * std::log(uniform()));
        const double angle = 2.0 * std::numbers::pi * uniform();
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Poisson(mean) by sequential inversion; intended for small means.
    unsigned poisson(double mean) noexcept {
        if (mean <= 0.0) {
            return 0;
        }
        const double u = uniform();
        double term = std::exp(-mean);
        double cumulative = term;
        unsigned k = 0;
        while (u > cumulative && k < 10000) {
            ++k;
            term *= mean / k;
            cumulative += term;
            if (term == 0.0) {
                break;
            }
        }
        return k;
    }

private:
    void refill() noexcept {
        const Philox4x32::Counter out = Philox4x32::block(
            {static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32), stream_lo_, stream_hi_},
            key_);
        ++counter_;
        buffer_[1] = (std::uint64_t{out[0]} << 32) | out[1];
        buffer_[0] = (std::uint64_t{out[2]} << 32) | out[3];
        buffered_ = 2;
    }

    Philox4x32::Key key_;
    std::uint32_t stream_lo_;
    std::uint32_t stream_hi_;
    std::uint64_t counter_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mmv
