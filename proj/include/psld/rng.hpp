#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace psld {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11): a keyed
/// bijection of a 128-bit counter, so any (key, counter) block can be
/// produced independently of every other.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key);
};

/// Source of standard normal draws addressed by chain index.
class NoiseSource {
public:
    virtual ~NoiseSource() = default;
    /// Fills `out` with fresh i.i.d. N(0, 1) draws from the stream of `chain`.
    virtual void normals(std::size_t chain, std::span<double> out) = 0;
};

/// One independent Philox stream per chain. The stream of chain c at draw
/// block k is Philox(key = seed, counter = (k_lo, k_hi, c_lo, c_hi)), so the
/// values a chain sees depend only on (seed, c, k), never on how chains are
/// scheduled across threads. Normals come in pairs from the polar method.
///
/// Different chains may be drawn from concurrently; a single chain may not.
class ChainStreams final : public NoiseSource {
public:
    ChainStreams(std::uint64_t seed, std::size_t n_chains);

    void normals(std::size_t chain, std::span<double> out) override;

    std::uint64_t seed() const { return seed_; }
    std::size_t n_chains() const { return next_block_.size(); }
    std::uint64_t blocks_used(std::size_t chain) const { return next_block_.at(chain); }

private:
    std::uint64_t seed_;
    Philox4x32::Key key_;
    std::vector<std::uint64_t> next_block_;
};

/// Deterministic zeros. Running a scheme on this source propagates the
/// expectation of any affine update exactly.
class ZeroNoise final : public NoiseSource {
public:
    void normals(std::size_t chain, std::span<double> out) override;
};

/// Two U(0,1] doubles from one Philox block (53 bits each).
std::array<double, 2> uniform_pair(const Philox4x32::Counter& bits);

}  // namespace psld
