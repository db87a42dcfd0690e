#pragma once
#include <cstdint>

namespace dgt {

// Independent random streams keyed by (seed, domain, iteration, node).
// Counter-based so that any node's draws at any iteration can be generated
// in isolation, in parallel, or out of order, and always bit-identically.
enum class RngDomain : std::uint64_t {
    Init = 1,     // initial decision variables
    Weights = 2,  // per-iteration parameter draws
    Suite = 3,    // random objective-suite generation
    Misc = 4,
};

class RngStream {
public:
    RngStream(std::uint64_t seed, RngDomain domain, std::uint64_t k = 0,
              std::uint64_t node = 0);

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53 random bits.
    double uniform01();
    double uniform(double lo, double hi);

    // Box-Muller using two fresh uniforms per call; nothing is cached, so a
    // stream's draw count is a pure function of the call sequence.
    double gaussian(double mean, double stddev);

    // Inverse-CDF sampling; the uniform is centered away from {0, 1}.
    double laplace(double loc, double scale);

private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
};

}  // namespace dgt
