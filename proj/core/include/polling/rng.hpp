#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace polling {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Named substream RNG. Sampling goes through uniform01() only, so replications
// are reproducible and independent streams never share state.
class Rng {
public:
    Rng() : engine_(0) {}
    Rng(std::uint64_t root_seed, std::uint64_t stream_id)
        : engine_(splitmix64(splitmix64(root_seed) ^ splitmix64(stream_id + 0x51ed2701)))
    {}

    // 53-bit uniform in [0, 1).
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double exponential(double rate) {
        return -std::log1p(-uniform01()) / rate;
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace polling
