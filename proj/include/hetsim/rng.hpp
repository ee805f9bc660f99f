#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace hetsim {

/// Derives an independent substream seed from a master seed and a stream
/// name, so adding one consumer never shifts another consumer's draws.
inline uint64_t derive_seed(uint64_t master, std::string_view stream) {
    uint64_t h = 14695981039346656037ULL ^ master;
    for (char c : stream) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    // splitmix64 finalizer
    h += 0x9e3779b97f4a7c15ULL;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
    return h ^ (h >> 31);
}

/// mt19937_64 wrapper with self-contained distributions. std::*_distribution
/// output is implementation-defined; these are pinned so equal seeds give
/// equal sequences everywhere.
class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed) {}
    Rng(uint64_t master, std::string_view stream) : engine_(derive_seed(master, stream)) {}

    uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Uniform integer in [0, n), rejection sampled to avoid modulo bias.
    uint64_t below(uint64_t n) {
        if (n == 0) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    int int_in(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(below(static_cast<uint64_t>(hi - lo + 1)));
    }

    /// Standard normal via Box-Muller (no spare caching, fixed draw count).
    double gaussian() {
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace hetsim
