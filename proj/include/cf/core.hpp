#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cf {

/// Transmit power in linear scale (not dB).
struct Power {
    double value;

    explicit Power(double p) : value(p) {
        if (!std::isfinite(p) || p <= 0.0)
            throw std::invalid_argument("power must be positive and finite, got " +
                                        std::to_string(p));
    }
};

/// Real channel gains of the L transmitters as seen by one relay.
/// Immutable after construction; the squared norm is cached.
class ChannelVector {
  public:
    explicit ChannelVector(std::vector<double> entries) : entries_(std::move(entries)) {
        if (entries_.empty())
            throw std::invalid_argument("channel vector needs at least one entry");
        norm_sq_ = 0.0;
        for (double x : entries_) {
            if (!std::isfinite(x))
                throw std::invalid_argument("channel entries must be finite");
            norm_sq_ += x * x;
        }
    }

    const std::vector<double>& entries() const { return entries_; }
    double operator[](std::size_t i) const { return entries_[i]; }
    std::size_t size() const { return entries_.size(); }
    double norm_sq() const { return norm_sq_; }
    bool is_zero() const { return norm_sq_ == 0.0; }

  private:
    std::vector<double> entries_;
    double norm_sq_;
};

/*
 * Counter-based random stream in the style of SplittableRandom: the state
 * advances by a per-stream odd increment and every output is a bijective
 * finalizer of the state. Substreams are derived purely from
 * (master_seed, stream_index), so trials can run in any order or in
 * parallel without changing any trial's samples.
 *
 * For a fixed master seed the map stream_index -> (state, increment) is
 * injective (odd-multiplier offset followed by a bijective mixer).
 *
 * Standard normals use the Marsaglia polar transform over 53-bit uniform
 * doubles; the sequence is fixed by this implementation, not by the
 * platform's <random> distributions.
 */
class RngStream {
  public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
        : master_seed_(master_seed), stream_index_(stream_index) {
        const std::uint64_t z = master_seed + kGoldenGamma * (stream_index + 1);
        state_ = mix64(z);
        gamma_ = mix64(z + kGoldenGamma) | 1ULL;  // per-stream odd increment
    }

    std::uint64_t next_u64() {
        state_ += gamma_;
        return mix64(state_);
    }

    /// Uniform double in [0, 1) with 53-bit resolution.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal draw (polar method, spare value cached).
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * next_unit() - 1.0;
            v = 2.0 * next_unit() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t stream_index() const { return stream_index_; }

  private:
    static constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

    // SplitMix64 finalizer; bijective on 64-bit words.
    static std::uint64_t mix64(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t master_seed_;
    std::uint64_t stream_index_;
    std::uint64_t state_;
    std::uint64_t gamma_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Pure derivation of the private stream for one Monte Carlo trial.
inline RngStream derive_trial_stream(std::uint64_t master_seed, std::uint64_t trial_index) {
    return RngStream(master_seed, trial_index);
}

/// L i.i.d. standard-normal channel gains; advances the stream.
inline ChannelVector sample_channel(std::size_t L, RngStream& rng) {
    if (L == 0)
        throw std::invalid_argument("channel dimension must be at least 1");
    std::vector<double> h(L);
    for (double& x : h)
        x = rng.next_normal();
    return ChannelVector(std::move(h));
}

}  // namespace cf
