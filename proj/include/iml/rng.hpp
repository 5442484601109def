#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace iml {

// Counter-based RNG (Philox4x32-10).  Every draw is a pure function of
// (seed, stream, step, slot), so path ensembles are reproducible for any
// scheduling of work across threads: path i always consumes exactly the
// draws keyed by stream=i, independent of which worker simulates it.
namespace philox {

inline constexpr std::uint32_t kMulA = 0xD2511F53u;
inline constexpr std::uint32_t kMulB = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeylA = 0x9E3779B9u;
inline constexpr std::uint32_t kWeylB = 0xBB67AE85u;

inline std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                          std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t prodA = std::uint64_t(kMulA) * ctr[0];
        const std::uint64_t prodB = std::uint64_t(kMulB) * ctr[2];
        const std::array<std::uint32_t, 4> next = {
            std::uint32_t(prodB >> 32) ^ ctr[1] ^ key[0],
            std::uint32_t(prodB),
            std::uint32_t(prodA >> 32) ^ ctr[3] ^ key[1],
            std::uint32_t(prodA),
        };
        ctr = next;
        key[0] += kWeylA;
        key[1] += kWeylB;
    }
    return ctr;
}

}  // namespace philox

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// One logical random stream, keyed by (seed, stream index).
class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) {
        const std::uint64_t k = splitmix64(seed ^ splitmix64(stream));
        key_ = {std::uint32_t(k), std::uint32_t(k >> 32)};
    }

    // Two independent uint64 lanes per (step, slot).
    std::array<std::uint64_t, 2> raw(std::uint64_t step, std::uint32_t slot) const {
        const std::array<std::uint32_t, 4> ctr = {std::uint32_t(step), std::uint32_t(step >> 32),
                                                  slot, 0x1f123bb5u};
        const auto out = philox::block(ctr, key_);
        return {(std::uint64_t(out[0]) << 32) | out[1], (std::uint64_t(out[2]) << 32) | out[3]};
    }

    // Uniform on the open interval (0,1); never returns 0 or 1, so logs are safe.
    static double to_u01(std::uint64_t bits) { return (double(bits >> 11) + 0.5) * 0x1.0p-53; }

    double u01(std::uint64_t step, std::uint32_t slot) const { return to_u01(raw(step, slot)[0]); }

    std::array<double, 2> u01_pair(std::uint64_t step, std::uint32_t slot) const {
        const auto r = raw(step, slot);
        return {to_u01(r[0]), to_u01(r[1])};
    }

    // Box-Muller pair; deterministic (no std::normal_distribution, whose
    // algorithm is implementation-defined).
    std::array<double, 2> normal_pair(std::uint64_t step, std::uint32_t slot) const {
        const auto u = u01_pair(step, slot);
        const double r = std::sqrt(-2.0 * std::log(u[0]));
        const double a = 2.0 * std::numbers::pi * u[1];
        return {r * std::cos(a), r * std::sin(a)};
    }

  private:
    std::array<std::uint32_t, 2> key_;
};

}  // namespace iml
