// rng.hpp — deterministic random streams for trajectory ensembles
//
// xoshiro256++ seeded through splitmix64, one independent stream per trajectory,
// so ensemble statistics depend on (seed, index) only and never on scheduling.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace nhsense {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64_next(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in (0,1); never exactly 0
    double next_double() { return (double(next() >> 11) + 0.5) * 0x1.0p-53; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4]{};
};

// Marsaglia-Tsang ziggurat for the standard normal, 128 layers.
class NormalSampler {
public:
    explicit NormalSampler(std::uint64_t seed) : rng_(seed) { ensure_tables(); }

    double operator()() {
        for (;;) {
            const std::uint64_t u = rng_.next();
            const std::int32_t hz = static_cast<std::int32_t>(u & 0xFFFFFFFFu);
            const std::uint32_t iz = static_cast<std::uint32_t>((u >> 32) & 127u);
            const auto ahz = static_cast<std::uint64_t>(std::abs(static_cast<std::int64_t>(hz)));
            if (ahz < kn_[iz]) {
                return hz * wn_[iz];
            }
            const double x = tail_or_wedge(hz, iz);
            if (!std::isnan(x)) return x;
        }
    }

private:
    double tail_or_wedge(std::int32_t hz, std::uint32_t iz) {
        constexpr double r = 3.442619855899;
        double x = hz * wn_[iz];
        if (iz == 0) {
            // tail beyond r
            double y;
            do {
                x = -std::log(rng_.next_double()) / r;
                y = -std::log(rng_.next_double());
            } while (y + y < x * x);
            return hz > 0 ? r + x : -r - x;
        }
        if (fn_[iz] + rng_.next_double() * (fn_[iz - 1] - fn_[iz]) < std::exp(-0.5 * x * x)) {
            return x;
        }
        return std::numeric_limits<double>::quiet_NaN(); // retry with a fresh layer
    }

    static void ensure_tables() {
        static const bool built = [] {
            constexpr double m = 2147483648.0; // 2^31
            double dn = 3.442619855899;
            const double vn = 9.91256303526217e-3;
            double tn = dn;
            const double q = vn / std::exp(-0.5 * dn * dn);
            kn_[0] = static_cast<std::uint32_t>((dn / q) * m);
            kn_[1] = 0;
            wn_[0] = q / m;
            wn_[127] = dn / m;
            fn_[0] = 1.0;
            fn_[127] = std::exp(-0.5 * dn * dn);
            for (int i = 126; i >= 1; --i) {
                dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
                kn_[i + 1] = static_cast<std::uint32_t>((dn / tn) * m);
                tn = dn;
                fn_[i] = std::exp(-0.5 * dn * dn);
                wn_[i] = dn / m;
            }
            return true;
        }();
        (void)built;
    }

    Xoshiro256pp rng_;
    static inline std::uint32_t kn_[128];
    static inline double wn_[128];
    static inline double fn_[128];
};

// Stream seed for trajectory `index` under a master seed.
inline std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ (0xA0761D6478BD642FULL * (index + 1));
    return splitmix64_next(s);
}

} // namespace nhsense
