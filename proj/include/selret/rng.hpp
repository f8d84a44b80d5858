#pragma once

#include <cstdint>

namespace selret {

// Deterministic counter-based generator (SplitMix64). The n-th output is a
// pure function of (seed, n), so streams are reproducible across platforms
// and trivially splittable; std::mt19937 + std::shuffle are avoided on
// purpose because std::shuffle's draw sequence is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n) via 128-bit multiply-shift. The bias is
    // at most n / 2^64, negligible for every use in this library.
    std::uint64_t bounded(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    bool bernoulli(double p) { return next_double() < p; }

    // Child stream i of a parent seed: mixes the stream index through the
    // same finalizer so sibling streams never overlap in practice.
    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
        Rng r(seed ^ (0xD1B54A32D192ED03ULL + stream * 0x9E3779B97F4A7C15ULL));
        return r.next_u64();
    }

    Rng split(std::uint64_t stream) const { return Rng(derive_seed(state_, stream)); }

private:
    std::uint64_t state_;
};

// In-place Fisher-Yates with the generator above; deterministic given seed.
template <typename Vec>
void deterministic_shuffle(Vec& items, Rng& rng) {
    using std::swap;
    if (items.size() < 2) return;
    for (std::size_t i = items.size() - 1; i > 0; --i) {
        std::size_t j = static_cast<std::size_t>(rng.bounded(i + 1));
        swap(items[i], items[j]);
    }
}

}  // namespace selret
