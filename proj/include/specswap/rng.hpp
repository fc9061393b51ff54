#pragma once

#include <cstdint>
#include <random>

namespace specswap {

// Deterministic per-seed stream. Gaussian deviates come from a hand-rolled
// Box-Muller pair so the byte-for-byte sequence is stable across standard
// library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() {
        // 53-bit mantissa in [0, 1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double normal();

    std::uint64_t integer() { return engine_(); }

    // uniform in [0, n)
    std::uint64_t below(std::uint64_t n);

  private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace specswap
