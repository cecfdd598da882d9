// Reproducible random number streams for parallel Monte Carlo.
//
// Replicate i of a batch always receives the stream derived from
// (master_seed, i) through the splitmix64 finalizer, so results do not
// depend on how replicates are scheduled across workers.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace slipsim {

namespace detail {

// splitmix64 finalizer (Vigna / Steele-Lea-Flood).
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace detail

// xoshiro256++ seeded from a 64-bit key via splitmix64.
class Rng {
  public:
    explicit Rng(std::uint64_t key = 0) {
        std::uint64_t s = key;
        for (auto& w : state_) {
            s += detail::golden;
            w = detail::mix64(s);
        }
        have_cached_normal_ = false;
    }

    std::uint64_t next_u64() {
        auto& s = state_;
        const std::uint64_t result = detail::rotl(s[0] + s[3], 23) + s[0];
        const std::uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = detail::rotl(s[3], 45);
        return result;
    }

    // uniform on (0,1); never returns 0 or 1
    double uniform() {
        // 53 random bits, then nudge away from 0
        const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return u + 0x1.0p-54;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // standard normal via Marsaglia's polar method with caching
    double normal() {
        if (have_cached_normal_) {
            have_cached_normal_ = false;
            return cached_normal_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        cached_normal_ = v * f;
        have_cached_normal_ = true;
        return u * f;
    }

    double exponential() { return -std::log(uniform()); }

    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  private:
    std::array<std::uint64_t, 4> state_{};
    double cached_normal_ = 0.0;
    bool have_cached_normal_ = false;
};

// Counter-based stream derivation: the stream for replicate `index` under
// `master_seed` depends only on the pair, never on batch size or order.
inline Rng replicate_stream(std::uint64_t master_seed, std::uint64_t index) {
    const std::uint64_t key =
        detail::mix64(master_seed ^ detail::mix64(index * detail::golden + 0x5851F42D4C957F2DULL));
    return Rng(key);
}

// Sample |N| conditioned on |N| >= c for a standard normal N (c >= 0).
// Robert's exponential-proposal rejection; exact for any c.
inline double normal_tail(Rng& rng, double c) {
    if (c <= 0.0) {
        return std::abs(rng.normal());
    }
    const double alpha = 0.5 * (c + std::sqrt(c * c + 4.0));
    for (;;) {
        const double x = c + rng.exponential() / alpha;
        const double d = x - alpha;
        if (std::log(rng.uniform()) <= -0.5 * d * d) return x;
    }
}

} // namespace slipsim
