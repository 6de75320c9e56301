#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace ldp {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// A (seed, stream) pair selects an independent sequence: seed is the key and
/// stream occupies the upper half of the 128-bit counter. Every Monte Carlo
/// trajectory gets its own stream index, so results do not depend on the order
/// in which trajectories are executed.
class PhiloxRng {
public:
    using result_type = std::uint32_t;

    PhiloxRng(std::uint64_t seed, std::uint64_t stream);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform on (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> block_{};
    unsigned used_ = 4;
};

/// Poisson(mean) draw consuming only rng.
std::uint64_t poisson_draw(PhiloxRng& rng, double mean);

}  // namespace ldp
