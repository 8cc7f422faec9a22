#pragma once

#include <cmath>
#include <cstdint>

namespace perc {

// Splittable counter-based stream: every (seed, stream) pair yields an
// independent, byte-reproducible sequence. SplitMix64 core, streams keyed
// by mixing the stream index into the state and the increment.
struct RngStreamSpec {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

class RngStream {
   public:
    RngStream(std::uint64_t seed, std::uint64_t stream) {
        state_ = mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ull));
        gamma_ = mix(state_ ^ mix(stream)) | 1ull;  // odd increment per stream
    }
    explicit RngStream(const RngStreamSpec& s) : RngStream(s.seed, s.stream) {}

    std::uint64_t next_u64() {
        state_ += gamma_;
        return mix(state_);
    }

    // uniform in [0,1)
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in (0,1]
    double next_double_open0() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return next_double() < p; }

    // unbiased integer in [0, n)
    std::uint64_t next_below(std::uint64_t n) {
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            std::uint64_t t = (0 - n) % n;
            while (lo < t) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

   private:
    std::uint64_t state_;
    std::uint64_t gamma_;
};

// Geometric skip sampler over a Bernoulli(p) scan: returns the number of
// failures before the next success, so a scan of positions j advances by
// skip+1 per draw. Equivalent in law to testing each position, O(successes).
inline double geometric_skip(RngStream& rng, double inv_log1mp) {
    const double u = rng.next_double_open0();
    return std::floor(std::log(u) * inv_log1mp);
}

}  // namespace perc
