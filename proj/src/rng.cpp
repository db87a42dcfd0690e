#include "dgt/rng.hpp"

#include <cmath>

namespace dgt {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer: bijective on 64-bit words, excellent avalanche.
std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t absorb(std::uint64_t h, std::uint64_t word) {
    return finalize(h + kGolden * (word + 1));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, RngDomain domain, std::uint64_t k,
                     std::uint64_t node) {
    std::uint64_t h = 0x8EBC6AF09C88C6E3ull;
    h = absorb(h, seed);
    h = absorb(h, static_cast<std::uint64_t>(domain));
    h = absorb(h, k);
    h = absorb(h, node);
    key_ = h;
}

std::uint64_t RngStream::next_u64() {
    return finalize(key_ + (++ctr_) * kGolden);
}

double RngStream::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
}

double RngStream::gaussian(double mean, double stddev) {
    // u1 in (0, 1] so the log is finite; u2 in [0, 1).
    double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
}

double RngStream::laplace(double loc, double scale) {
    // u in (0, 1), symmetric around 1/2.
    double u = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    double c = u - 0.5;
    double sign = c < 0.0 ? -1.0 : 1.0;
    return loc - scale * sign * std::log1p(-2.0 * std::fabs(c));
}

}  // namespace dgt
