#ifndef CNNBP_RANDOM_HPP
#define CNNBP_RANDOM_HPP

#include <cstdint>

namespace cnn {

/// Counter-based generator: every draw is a pure function of
/// (seed, stream, counter), so any value can be regenerated independently of
/// how many other draws happened before it.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept : seed_(seed), stream_(stream) {}

    std::uint64_t bits(std::uint64_t counter) const noexcept;

    /// Uniform in [0, 1) with 53 random bits.
    double unit(std::uint64_t counter) const noexcept;

    /// Uniform in [lo, hi).
    double uniform(std::uint64_t counter, double lo, double hi) const noexcept {
        return lo + (hi - lo) * unit(counter);
    }

    /// Uniform integer in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t counter, std::uint64_t n) const noexcept;

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
};

/// Sequential wrapper that advances its own counter.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream) noexcept : rng_(seed, stream) {}

    double unit() noexcept { return rng_.unit(counter_++); }
    double uniform(double lo, double hi) noexcept { return rng_.uniform(counter_++, lo, hi); }
    std::uint64_t below(std::uint64_t n) noexcept { return rng_.below(counter_++, n); }

private:
    CounterRng rng_;
    std::uint64_t counter_ = 0;
};

} // namespace cnn

#endif // CNNBP_RANDOM_HPP
