#pragma once

#include "rpy/types.hpp"

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace rpy {

/// splitmix64 step; used to derive independent seed streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/**
 * Deterministic random stream (xoshiro256** core seeded via splitmix64).
 *
 * All stochastic code in the library draws from this class so that runs are
 * bit-reproducible for a given seed on any platform. Streams for parallel
 * runs are derived with Rng::derive, which mixes integer tags into the seed.
 */
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    /// Derive an independent stream keyed by (seed, tags...).
    static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
        std::uint64_t sm = seed;
        std::uint64_t mixed = splitmix64(sm);
        for (std::uint64_t tag : tags) {
            sm = mixed ^ (tag + 0x9e3779b97f4a7c15ULL);
            mixed = splitmix64(sm);
        }
        return Rng(mixed);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    Index uniform_index(Index n) {
        if (n <= 0) throw InvalidParameter("uniform_index: n must be positive");
        return static_cast<Index>(next_u64() % static_cast<std::uint64_t>(n));
    }

    /// Standard normal via Box-Muller (two uniforms per draw, no cached spare).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Sample an index from an unnormalized nonnegative weight vector.
    Index categorical(const Vector& weights) {
        const double total = weights.sum();
        if (!(total > 0.0)) throw InvalidParameter("categorical: weights must have positive sum");
        double u = uniform() * total;
        for (Index i = 0; i < weights.size(); ++i) {
            u -= weights[i];
            if (u < 0.0) return i;
        }
        return weights.size() - 1;
    }

    /// k distinct indices drawn uniformly from [0, n), in draw order.
    std::vector<Index> sample_without_replacement(Index n, Index k) {
        if (k > n) throw InvalidParameter("sample_without_replacement: k > n");
        std::vector<Index> pool(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
        std::vector<Index> out;
        out.reserve(static_cast<std::size_t>(k));
        for (Index i = 0; i < k; ++i) {
            const Index j = i + uniform_index(n - i);
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
            out.push_back(pool[static_cast<std::size_t>(i)]);
        }
        return out;
    }

    /// Random vector with i.i.d. standard normal entries.
    Vector normal_vector(Index n) {
        Vector v(n);
        for (Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    /// Random probability vector (normalized positive uniforms).
    Vector simplex_vector(Index n) {
        Vector v(n);
        for (Index i = 0; i < n; ++i) v[i] = uniform() + 1e-3;
        v /= v.sum();
        return v;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
};

} // namespace rpy
