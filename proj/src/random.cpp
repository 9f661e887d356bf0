#include "cnnbp/random.hpp"

namespace cnn {

namespace {

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

std::uint64_t CounterRng::bits(std::uint64_t counter) const noexcept {
    return mix64(mix64(mix64(seed_) ^ stream_) ^ counter);
}

double CounterRng::unit(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
}

std::uint64_t CounterRng::below(std::uint64_t counter, std::uint64_t n) const noexcept {
    // High half of the 64x64 product, split into 32-bit limbs.
    const std::uint64_t x = bits(counter);
    const std::uint64_t x_lo = x & 0xFFFFFFFFu, x_hi = x >> 32;
    const std::uint64_t n_lo = n & 0xFFFFFFFFu, n_hi = n >> 32;
    const std::uint64_t lo_lo = x_lo * n_lo;
    const std::uint64_t hi_lo = x_hi * n_lo;
    const std::uint64_t lo_hi = x_lo * n_hi;
    const std::uint64_t mid = (lo_lo >> 32) + (hi_lo & 0xFFFFFFFFu) + lo_hi;
    return x_hi * n_hi + (hi_lo >> 32) + (mid >> 32);
}

} // namespace cnn
