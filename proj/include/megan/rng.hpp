// SPDX-License-Identifier: Apache-2.0
#ifndef MEGAN_RNG_HPP
#define MEGAN_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace megan {

/// SplitMix64 mixing step, used to derive independent seed streams from one value.
std::uint64_t splitmix64(std::uint64_t x);

/// Seeded random stream with fully specified output: every variate is computed
/// from raw mt19937_64 words, so identical seeds give identical draws on any
/// platform (std::uniform_real_distribution and friends make no such promise).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 bits of randomness.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform double in the open interval (0, 1); endpoint draws are redrawn.
    double uniform_open() {
        for (;;) {
            const double u = uniform();
            if (u > 0.0 && u < 1.0) return u;
        }
    }

    /// Standard normal via Box-Muller; consumes two uniforms per pair.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]: keeps log finite
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Unbiased integer in [0, n), n >= 1, by rejection.
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
        for (;;) {
            const std::uint64_t x = engine_();
            if (x <= limit) return x % n;
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace megan

#endif
