#pragma once

#include <cstdint>

namespace mechlearn {

/// Counter-based random stream: draw i of stream (seed, stream_id) is a pure
/// hash of (seed, stream_id, i), so parallel workers can own disjoint streams
/// and reproduce bit-for-bit regardless of scheduling.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
        : key_(mix(seed ^ 0x9e3779b97f4a7c15ull) ^ mix(stream_id * 0xbf58476d1ce4e5b9ull + 1)) {}

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ull); }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    std::uint64_t counter() const { return counter_; }

  private:
    // SplitMix64 finalizer; applied to key+counter this is the SplitMix64
    // sequence in counter form.
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace mechlearn
