#pragma once

// Deterministic, splittable random streams. A stream is identified by a base
// seed plus up to two tags (e.g. purpose, period); every consumer derives its
// own stream so unrelated draws never interleave. Samplers avoid the standard
// distributions on purpose: their output sequences are implementation-defined,
// while the transforms below are pinned by this code.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>

namespace icboost::rng {

inline constexpr const char* kGeneratorId =
    "splitmix64-streams/mt19937_64/box-muller/marsaglia-tsang:v1";

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t substream(std::uint64_t seed, std::uint64_t tag_a, std::uint64_t tag_b = 0) {
    std::uint64_t s = mix64(seed);
    s = mix64(s ^ (tag_a * 0xbf58476d1ce4e5b9ULL));
    s = mix64(s ^ (tag_b * 0x94d049bb133111ebULL));
    return s;
}

class Rng {
public:
    explicit Rng(std::uint64_t stream_seed) : eng_(stream_seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), rejection sampled (no modulo bias).
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
        std::uint64_t x, r;
        do {
            x = eng_();
            r = x % n;
        } while (x - r > static_cast<std::uint64_t>(-n)); // wraps to 2^64 - n
        return r;
    }

    // Standard normal via Box-Muller; the second draw of each pair is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
        double u2 = uniform();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    // Gamma(shape, 1) via Marsaglia-Tsang; shape boosting covers shape < 1.
    double gamma(double shape) {
        if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
        if (shape < 1.0) {
            double u = uniform();
            while (u <= 0.0) u = uniform();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double t = 1.0 + c * x;
            if (t <= 0.0) continue;
            double v = t * t * t;
            double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Student-t with dof degrees of freedom: Z / sqrt(ChiSq(dof)/dof).
    double student_t(double dof) {
        if (!(dof > 0.0)) throw std::invalid_argument("student_t: dof must be positive");
        double z = normal();
        double chi2 = 2.0 * gamma(0.5 * dof);
        while (chi2 <= 0.0) chi2 = 2.0 * gamma(0.5 * dof);
        return z * std::sqrt(dof / chi2);
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace icboost::rng
