#pragma once

#include <cmath>
#include <cstdint>

namespace soie {

/// Named noise channels; every (seed, trial, channel, lane) tuple owns an
/// independent sample stream.
enum class Channel : std::uint64_t {
    sensing = 1,
    haptic = 2,
    motor = 3,
    start_offset = 4,
    optimizer = 5,
};

namespace detail {

// splitmix64 finalizer; also used to hash key material together.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
    return mix64(h + 0x9E3779B97F4A7C15ULL + v);
}

} // namespace detail

/// Counter-based random stream.
///
/// The stream state is a key hashed from (master_seed, trial_index, channel,
/// lane) plus a draw counter, so identical tuples reproduce identical sample
/// sequences bit-for-bit regardless of evaluation order, thread schedule or
/// how many other streams were consumed in between. Streams are cheap value
/// types and may be copied across threads.
class SeededStream {
public:
    SeededStream(std::uint64_t master_seed, std::uint64_t trial_index, Channel channel,
                 std::uint64_t lane = 0)
        : master_seed_(master_seed), trial_index_(trial_index), channel_(channel), lane_(lane) {
        std::uint64_t key = detail::mix64(master_seed + 0x9E3779B97F4A7C15ULL);
        key = detail::combine(key, trial_index);
        key = detail::combine(key, static_cast<std::uint64_t>(channel));
        key = detail::combine(key, lane);
        key_ = key;
    }

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t trial_index() const { return trial_index_; }
    Channel channel() const { return channel_; }
    std::uint64_t lane() const { return lane_; }

    std::uint64_t next_u64() {
        counter_ += 0x9E3779B97F4A7C15ULL;
        return detail::mix64(key_ ^ counter_);
    }

    /// Uniform double in (0, 1].
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_below(std::uint64_t n) {
        // Modulo bias is ~n/2^64, irrelevant for the small n used here.
        return next_u64() % n;
    }

    /// Standard normal via the Marsaglia polar method; the paired draw is
    /// cached. Rejection consumes a variable number of uniforms, which is
    /// fine inside a private stream.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double factor = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * factor;
        has_spare_ = true;
        return u * factor;
    }

    double normal(double mean, double std_dev) { return mean + std_dev * normal(); }

private:
    std::uint64_t master_seed_;
    std::uint64_t trial_index_;
    Channel channel_;
    std::uint64_t lane_;
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Identifies one trial's worth of randomness; hands out its channel streams.
struct StreamKey {
    std::uint64_t master_seed = 0;
    std::uint64_t trial_index = 0;

    SeededStream channel(Channel c, std::uint64_t lane = 0) const {
        return SeededStream(master_seed, trial_index, c, lane);
    }
};

} // namespace soie
