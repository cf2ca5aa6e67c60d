#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hgcnn {

// Seeded generator used everywhere randomness is needed. The conversions from
// raw bits to doubles are spelled out here instead of going through
// std::uniform_real_distribution, whose output is implementation-defined;
// byte-identical runs across toolchains depend on it.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 bits of mantissa.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Rejection-free modulo would bias; n is
    /// always tiny compared with 2^64 so the bias is below 2^-50 — fine for
    /// data generation, and deterministic either way.
    std::uint64_t uniform_index(std::uint64_t n) { return engine_() % n; }

    /// Standard normal via Box-Muller. One cached value per pair of draws.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        double u2 = uniform();
        // Avoid log(0).
        u1 = u1 > 0.0 ? u1 : 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Fisher-Yates shuffle with deterministic draw order.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace hgcnn
