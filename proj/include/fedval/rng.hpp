// Seeded deterministic randomness for the whole simulator.
//
// Every stochastic step in the pipeline (partitioning, corruption, policy
// init, selection sampling) draws from an RngStream so that a (seed,
// stream id) pair fully determines a run. The draw protocol below is part
// of the contract; reproducing a sequence must never require library
// internals:
//
//   next_u64()       SplitMix64: state += 0x9E3779B97F4A7C15, then the
//                    Stafford mix13 finalizer.
//   uniform01()      (next_u64() >> 11) * 2^-53              in [0, 1)
//   uniform01_open() ((next_u64() >> 11) + 1) * 2^-53        in (0, 1]
//   gaussian()       Box-Muller, exactly two draws per call:
//                    sqrt(-2 ln u_open) * cos(2 pi u)
//   gamma(a >= 1)    Marsaglia-Tsang squeeze; each attempt draws one
//                    gaussian then one uniform01
//   gamma(a < 1)     gamma(a + 1) * uniform01_open()^(1/a), boost last
//   dirichlet(a, n)  n gamma(a) draws in index order, normalized
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace fedval::numkit {

class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
        : seed_(seed), stream_id_(stream_id),
          state_(mix(mix(seed) ^ mix(stream_id ^ 0x6A09E667F3BCC909ULL))) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    // Independent sub-stream; same (seed, stream, sub) -> same sequence.
    RngStream derive(std::uint64_t sub) const {
        return RngStream(seed_, mix(stream_id_ * 0x9E3779B97F4A7C15ULL + sub + 1));
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix_no_advance(state_);
    }

    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform01_open() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Unbiased integer in [0, n) via rejection.
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
        const std::uint64_t rem = std::uint64_t(0) - n;  // 2^64 mod n == (2^64 - n) mod n
        const std::uint64_t bound = std::uint64_t(0) - (rem % n);
        std::uint64_t draw = next_u64();
        while (bound != 0 && draw >= bound) draw = next_u64();
        return draw % n;
    }

    int bernoulli(double p) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bernoulli: p outside [0,1]");
        return uniform01() < p ? 1 : 0;
    }

    double gaussian() {
        const double u1 = uniform01_open();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double gamma(double alpha) {
        if (!(alpha > 0.0)) throw std::invalid_argument("gamma: alpha must be positive");
        if (alpha < 1.0) {
            const double g = gamma(alpha + 1.0);
            return g * std::pow(uniform01_open(), 1.0 / alpha);
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            const double x = gaussian();
            const double t = 1.0 + c * x;
            if (t <= 0.0) continue;
            const double v = t * t * t;
            const double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Symmetric Dirichlet(alpha) over n components via normalized gammas.
    std::vector<double> dirichlet(double alpha, std::size_t n) {
        if (!(alpha > 0.0)) throw std::invalid_argument("dirichlet: alpha must be positive");
        if (n == 0) throw std::invalid_argument("dirichlet: n must be positive");
        std::vector<double> out(n);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = gamma(alpha);
            sum += out[i];
        }
        if (sum <= 0.0) {  // all-zero draws are possible only in underflow corners
            const double uniform = 1.0 / static_cast<double>(n);
            for (double& v : out) v = uniform;
            return out;
        }
        for (double& v : out) v /= sum;
        return out;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        return mix_no_advance(z);
    }

    static std::uint64_t mix_no_advance(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t state_;
};

// First k indices of a partial Fisher-Yates shuffle of [0, m); the result
// is in selection order. Draws exactly k uniform_below calls.
inline std::vector<std::size_t> sample_without_replacement(RngStream& rng, std::size_t m,
                                                           std::size_t k) {
    if (k > m) throw std::invalid_argument("sample_without_replacement: k exceeds m");
    std::vector<std::size_t> idx(m);
    for (std::size_t i = 0; i < m; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_below(m - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

// Single categorical draw from a probability vector (cumulative scan).
inline std::size_t categorical(RngStream& rng, const std::vector<double>& probs) {
    if (probs.empty()) throw std::invalid_argument("categorical: empty probability vector");
    const double u = rng.uniform01();
    double cum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        cum += probs[i];
        if (u < cum) return i;
    }
    return probs.size() - 1;
}

}  // namespace fedval::numkit
