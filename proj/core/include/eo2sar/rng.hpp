#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>

namespace eo2sar {

// Deterministic random stream. mt19937_64 output is bit-exact across
// platforms; the distribution transforms below are our own so sampled
// sequences do not depend on the standard library implementation.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased draw from [0, n), n >= 1 (Lemire's multiply-shift with rejection).
    uint64_t uniform_int(uint64_t n) {
        uint64_t threshold = (-n) % n;
        for (;;) {
            auto m = static_cast<unsigned __int128>(next_u64()) * n;
            if (static_cast<uint64_t>(m) >= threshold) return static_cast<uint64_t>(m >> 64);
        }
    }

    // Box-Muller; one value per call, no cached spare.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Unit-mean exponential.
    double exponential() { return -std::log(1.0 - uniform()); }

    bool bernoulli(double p) { return uniform() < p; }

    // Fisher-Yates.
    template <typename It>
    void shuffle(It first, It last) {
        auto n = static_cast<uint64_t>(last - first);
        for (uint64_t i = n; i > 1; --i) {
            uint64_t j = uniform_int(i);
            std::swap(first[i - 1], first[j]);
        }
    }

    template <typename Container>
    void shuffle(Container& container) {
        shuffle(container.begin(), container.end());
    }

    // Named sub-stream derivation so one global seed fans out to
    // reproducible component seeds (split, init, shuffle, dropout, synth).
    static uint64_t derive(uint64_t seed, std::string_view stream) {
        uint64_t h = 14695981039346656037ull;  // FNV-1a
        for (char c : stream) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        uint64_t z = seed ^ h;
        // splitmix64 finalizer
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace eo2sar
