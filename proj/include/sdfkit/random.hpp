// random.hpp — Seeded, platform-independent random streams
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The distribution code lives here rather than in <random> because
// library distributions are allowed to differ between implementations.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace sdfkit {

// SplitMix64 finaliser of seed + golden-ratio multiples of (index + 1).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Box-Muller; the second variate of each pair is cached.
    double normal();
    // Uniform integer in [0, n) by rejection.
    std::size_t below(std::size_t n);

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 engine_;
    double spare_{0.0};
    bool has_spare_{false};
};

} // namespace sdfkit
