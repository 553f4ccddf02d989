#include "psld/rng.hpp"

#include <algorithm>
#include <cmath>

namespace psld {

namespace {

constexpr std::uint32_t kWeylA = 0x9E3779B9;
constexpr std::uint32_t kWeylB = 0xBB67AE85;
constexpr std::uint32_t kMulA = 0xD2511F53;
constexpr std::uint32_t kMulB = 0xCD9E8D57;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
}

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t lo0, hi0, lo1, hi1;
        mulhilo(kMulA, ctr[0], lo0, hi0);
        mulhilo(kMulB, ctr[2], lo1, hi1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeylA;
        key[1] += kWeylB;
    }
    return ctr;
}

std::array<double, 2> uniform_pair(const Philox4x32::Counter& bits) {
    constexpr double kUnit = 0x1.0p-53;
    const std::uint64_t a = (static_cast<std::uint64_t>(bits[0]) << 32) | bits[1];
    const std::uint64_t b = (static_cast<std::uint64_t>(bits[2]) << 32) | bits[3];
    // (k + 1) 2^-53 lies in (0, 1], keeping log() finite.
    return {static_cast<double>((a >> 11) + 1) * kUnit, static_cast<double>((b >> 11) + 1) * kUnit};
}

ChainStreams::ChainStreams(std::uint64_t seed, std::size_t n_chains)
    : seed_(seed),
      key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      next_block_(n_chains, 0) {}

void ChainStreams::normals(std::size_t chain, std::span<double> out) {
    std::uint64_t& k = next_block_.at(chain);
    const auto c_lo = static_cast<std::uint32_t>(chain);
    const auto c_hi = static_cast<std::uint32_t>(static_cast<std::uint64_t>(chain) >> 32);
    for (std::size_t i = 0; i < out.size(); i += 2) {
        // Marsaglia polar method; each attempt consumes one block.
        double u, v, r2;
        do {
            const Philox4x32::Counter ctr{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32), c_lo, c_hi};
            ++k;
            const auto [u1, u2] = uniform_pair(Philox4x32::block(ctr, key_));
            u = 2.0 * u1 - 1.0;
            v = 2.0 * u2 - 1.0;
            r2 = u * u + v * v;
        } while (r2 >= 1.0 || r2 == 0.0);
        const double f = std::sqrt(-2.0 * std::log(r2) / r2);
        out[i] = u * f;
        if (i + 1 < out.size()) {
            out[i + 1] = v * f;
        }
    }
}

void ZeroNoise::normals(std::size_t, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
}

}  // namespace psld
