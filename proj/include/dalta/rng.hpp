#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "dalta/errors.hpp"

namespace dalta {

// Deterministic RNG: xoshiro256** seeded via splitmix64, with hand-rolled
// Gaussian/gamma sampling so identical seeds give identical streams on any
// platform. Identical seed + identical call sequence -> identical outputs.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (int i = 0; i < 4; ++i) state_[i] = splitmix64(x);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    int uniform_int(int n) {
        if (n <= 0) throw DimensionError("Rng::uniform_int: n must be positive");
        return static_cast<int>(next_u64() % static_cast<uint64_t>(n));
    }

    // Standard normal via Box-Muller; caches the second variate.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Marsaglia-Tsang; the alpha<1 case boosts through Gamma(alpha+1).
    double gamma(double alpha) {
        if (alpha <= 0.0) throw DimensionError("Rng::gamma: alpha must be positive");
        if (alpha < 1.0) {
            const double g = gamma(alpha + 1.0);
            double u = uniform();
            while (u <= 0.0) u = uniform();
            return g * std::pow(u, 1.0 / alpha);
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            double u = uniform();
            while (u <= 0.0) u = uniform();
            const double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Symmetric Dirichlet draw of length n; sums to 1 up to rounding.
    std::vector<double> dirichlet(int n, double alpha) {
        std::vector<double> out(n);
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            out[i] = gamma(alpha);
            sum += out[i];
        }
        if (sum <= 0.0) { // possible only through underflow at tiny alpha
            out.assign(n, 0.0);
            out[uniform_int(n)] = 1.0;
            return out;
        }
        for (double& v : out) v /= sum;
        return out;
    }

    // Knuth's method; fine for the document lengths used here.
    int poisson(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

    // Draw a categorical index from an unnormalized non-negative weight vector.
    int categorical(const std::vector<double>& weights) {
        const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        double u = uniform() * total;
        for (size_t i = 0; i < weights.size(); ++i) {
            u -= weights[i];
            if (u < 0.0) return static_cast<int>(i);
        }
        return static_cast<int>(weights.size()) - 1;
    }

    // k distinct indices out of [0, n) via partial Fisher-Yates. If k > n the
    // selection wraps in rounds so every round is itself without replacement.
    std::vector<int> sample_indices(int n, int k) {
        std::vector<int> out;
        out.reserve(k);
        while (k > 0) {
            const int take = std::min(k, n);
            std::vector<int> pool(n);
            for (int i = 0; i < n; ++i) pool[i] = i;
            for (int i = 0; i < take; ++i) {
                const int j = i + uniform_int(n - i);
                std::swap(pool[i], pool[j]);
                out.push_back(pool[i]);
            }
            k -= take;
        }
        return out;
    }

private:
    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t state_[4];
    bool have_cached_ = false;
    double cached_ = 0.0;
};

} // namespace dalta
