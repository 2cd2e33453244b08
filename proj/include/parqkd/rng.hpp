#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace parqkd {

// Deterministic splittable PRNG (splitmix64 core). Standard-library engines
// are avoided on purpose: distribution implementations differ between
// standard libraries and transcripts must reproduce byte-for-byte from a
// 64-bit seed on any platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform integer in [0, n). Multiply-shift; the modulo bias of ~n/2^64
    // is far below every tolerance used in this project.
    std::int64_t below(std::int64_t n) {
        if (n <= 0) throw std::invalid_argument("Rng::below: n must be positive");
        return static_cast<std::int64_t>(
            (static_cast<unsigned __int128>(next()) * static_cast<std::uint64_t>(n)) >> 64);
    }

    // Samples an index from an (unnormalised is fine) probability table.
    int categorical(std::span<const double> weights) {
        double total = 0;
        for (double w : weights) total += w;
        double u = uniform() * total;
        double acc = 0;
        for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
            acc += weights[k];
            if (u < acc) return static_cast<int>(k);
        }
        return static_cast<int>(weights.size()) - 1;
    }

    double normal() {
        // Marsaglia polar, deterministic (no cached spare).
        while (true) {
            double u = 2 * uniform() - 1;
            double v = 2 * uniform() - 1;
            double s = u * u + v * v;
            if (s > 0 && s < 1) return u * std::sqrt(-2 * std::log(s) / s);
        }
    }

    // Independent stream for trial `stream`; the parent state is untouched.
    Rng fork(std::uint64_t stream) const {
        Rng child(state_ ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
        child.next();
        return child;
    }

  private:
    std::uint64_t state_;
};

}  // namespace parqkd
