#pragma once

#include <concepts>
#include <cstdint>
#include <random>

namespace kinex {

// Anything that can feed the samplers: a unit uniform and a bounded integer.
// Tests use scripted sources to force particular coins and pairs.
template <class S>
concept UniformSource = requires(S& s, std::uint64_t n) {
    { s.uniform() } -> std::convertible_to<double>;
    { s.below(n) } -> std::convertible_to<std::uint64_t>;
};

/// Deterministic random stream identified by (seed, stream id).
///
/// Backed by std::mt19937_64, whose output sequence is fixed by the standard.
/// The state is initialised from std::seed_seq over the four 32-bit halves of
/// seed and stream id; seed_seq's mixing is also standardised, so a given
/// (seed, stream) pair reproduces the same samples on every conforming
/// implementation. Derived quantities (uniforms, bounded integers) are computed
/// here rather than through <random> distributions, whose algorithms are
/// implementation-defined.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_; }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n); n > 0. Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t n);

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

static_assert(UniformSource<RngStream>);

}  // namespace kinex
