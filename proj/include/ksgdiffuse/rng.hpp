#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

#include "ksgdiffuse/grid.hpp"

namespace ksg {

/// Philox4x32-10 counter-based generator. Output depends only on
/// (key, counter), so draws are reproducible regardless of evaluation
/// order or thread scheduling.
namespace philox {

inline std::array<std::uint32_t, 4> round10(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
        const std::uint64_t p0 = std::uint64_t(kMul0) * ctr[0];
        const std::uint64_t p1 = std::uint64_t(kMul1) * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
               static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
               static_cast<std::uint32_t>(p0)};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

} // namespace philox

/// Stream purposes keep independent uses of the same seed decoupled.
enum class RngPurpose : std::uint32_t {
    ChainInit = 1,
    ReverseNoise = 2,
    KsgNoise = 3,
    MaskCartesian = 4,
    MaskGaussian = 5,
    RefineNoise = 6,
    Phantom = 7,
};

/// Deterministic stream keyed by (seed, purpose, stream). Every draw is
/// addressed by (step, block); no internal state is consumed.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, RngPurpose purpose, std::uint32_t stream = 0)
        : key_{static_cast<std::uint32_t>(seed),
               static_cast<std::uint32_t>(seed >> 32)},
          purpose_(static_cast<std::uint32_t>(purpose)),
          stream_(stream) {}

    std::array<std::uint32_t, 4> raw(std::uint32_t step, std::uint32_t block) const {
        return philox::round10({purpose_, stream_, step, block}, key_);
    }

    /// Uniform double in (0, 1), 32-bit resolution.
    double uniform(std::uint32_t step, std::uint32_t block) const {
        const auto r = raw(step, block);
        return (static_cast<double>(r[0]) + 0.5) * 0x1p-32;
    }

    /// Two independent standard normals from one counter block (Box-Muller).
    std::pair<double, double> normal_pair(std::uint32_t step, std::uint32_t block) const {
        const auto r = raw(step, block);
        const double u1 = (static_cast<double>(r[0]) + 0.5) * 0x1p-32;
        const double u2 = (static_cast<double>(r[1]) + 0.5) * 0x1p-32;
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * std::numbers::pi * u2;
        return {mag * std::cos(ang), mag * std::sin(ang)};
    }

    /// Complex i.i.d. Gaussian field, stddev per real component.
    ComplexImage normal_field(std::uint32_t step, std::size_t h, std::size_t w,
                              double stddev) const {
        ComplexImage out(h, w);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const auto [re, im] = normal_pair(step, static_cast<std::uint32_t>(i));
            out[i] = Complex(stddev * re, stddev * im);
        }
        return out;
    }

private:
    std::array<std::uint32_t, 2> key_;
    std::uint32_t purpose_;
    std::uint32_t stream_;
};

} // namespace ksg
