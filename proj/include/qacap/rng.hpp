#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qacap {

// All randomness flows through std::mt19937_64, whose output sequence is fixed
// by the standard. The std distributions are implementation-defined, so the
// helpers below map raw 64-bit draws to values themselves.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi], rejection sampled to avoid modulo bias.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

private:
    std::mt19937_64 engine_;
};

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

// 64-bit FNV-1a over the bytes of `s`.
std::uint64_t fnv1a64(std::string_view s) noexcept;

// Per-item seed derived from a run seed and a stable key (an image id). Does
// not depend on iteration order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) noexcept;

}  // namespace qacap
