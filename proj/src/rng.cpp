// SPDX-License-Identifier: Apache-2.0
#include "megan/rng.hpp"

namespace megan {

// Fixed-increment splitmix64; used to derive independent seed streams.
std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace megan
