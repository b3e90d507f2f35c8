#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace timberdiff {

/// Deterministic random stream. Every consumer of randomness derives its own
/// stream from one root seed via split(), so adding or reordering consumers
/// never perturbs unrelated results.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed)), engine_(state_) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform double in [0, 1), 53-bit resolution. Hand-rolled so the stream
    /// does not depend on the standard library's distribution internals.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_index(std::uint64_t n) {
        // Rejection sampling to avoid modulo bias.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return v % n;
    }

    /// Standard normal via Box-Muller (cached pair).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    /// Derive an independent child stream. Same (seed, label) always yields
    /// the same stream.
    Rng split(std::uint64_t label) const {
        return Rng(state_ + 0x9e3779b97f4a7c15ULL * (label + 1));
    }

    Rng split(std::string_view label) const {
        // FNV-1a over the label, then feed through split().
        std::uint64_t h = 1469598103934665603ULL;
        for (const char c : label) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ULL;
        }
        return split(h);
    }

private:
    static std::uint64_t mix(std::uint64_t x) {
        // splitmix64 finalizer.
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::uint64_t state_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace timberdiff
