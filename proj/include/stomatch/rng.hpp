#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace stomatch {

// SplitMix64 finalizer. Full 64-bit avalanche; the basis for seeding and splitting.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Child seed for (key, stream, index); pure, so per-trial seeds never depend
// on scheduling.
inline std::uint64_t derive_seed(std::uint64_t key, std::uint64_t stream, std::uint64_t index) {
    return mix64(mix64(key ^ (0x9e3779b97f4a7c15ULL * (stream + 1))) + index);
}

// Counter-based splittable generator: the stream is a pure function of
// (key, stream) and the draw counter, so trial N's randomness never depends
// on how trials 0..N-1 were scheduled.
class Rng {
public:
    Rng(std::uint64_t key, std::uint64_t stream = 0, std::uint64_t substream = 0)
        : state_(mix64(key) ^ mix64(mix64(stream) + 0x9e3779b97f4a7c15ULL * (substream + 1))) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi].
    double next_range(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        // Rejection keeps the draw exactly uniform.
        std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Poisson draw by Knuth's product method; means above 30 are split into
    // chunks so the running product never underflows.
    std::uint64_t next_poisson(double mean) {
        std::uint64_t total = 0;
        while (mean > 30.0) {
            total += poisson_small(30.0);
            mean -= 30.0;
        }
        return total + poisson_small(mean);
    }

private:
    std::uint64_t poisson_small(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        std::uint64_t k = 0;
        double prod = next_double();
        while (prod > limit) {
            ++k;
            prod *= next_double();
        }
        return k;
    }

    std::uint64_t state_;
};

// Cumulative-weight sampler for a fixed discrete distribution.
class DiscreteSampler {
public:
    explicit DiscreteSampler(const std::vector<double>& weights) : cum_(weights) {
        double run = 0.0;
        for (double& c : cum_) {
            run += c;
            c = run;
        }
        total_ = run;
    }

    // Index in [0, size); assumes total weight > 0.
    std::size_t sample(Rng& rng) const {
        const double u = rng.next_double() * total_;
        std::size_t lo = 0, hi = cum_.size() - 1;
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (cum_[mid] <= u)
                lo = mid + 1;
            else
                hi = mid;
        }
        return lo;
    }

    double total() const { return total_; }

private:
    std::vector<double> cum_;
    double total_ = 0.0;
};

} // namespace stomatch
