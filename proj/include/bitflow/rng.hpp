#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bitflow {

/// Deterministic RNG: mt19937_64 (sequence pinned by the standard) with
/// hand-rolled uniform/gaussian transforms so streams are bit-identical
/// across platforms and standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    double gaussian() {
        // Box-Muller; rejects the u = 0 corner.
        double u = uniform01();
        while (u <= 0.0) u = uniform01();
        const double v = uniform01();
        return std::sqrt(-2.0 * std::log(u)) *
               std::cos(6.283185307179586476925286766559 * v);
    }

    std::uint64_t raw() { return gen_(); }

  private:
    std::mt19937_64 gen_;
};

} // namespace bitflow
