#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace vlstm::rng {

// Mixes a base seed with a label so that every parameter block, shuffle
// stream, etc. gets its own independent substream. Name-keyed derivation
// keeps the draws independent of the order blocks are initialized in.
uint64_t derive(uint64_t seed, std::string_view label);
uint64_t derive(uint64_t seed, uint64_t index);

// Deterministic draw stream. All sampling is hand-rolled on top of
// mt19937_64 so results are identical across platforms and standard
// library implementations.
class Stream {
public:
    explicit Stream(uint64_t seed) : gen_(seed) {}

    // uniform in [0, 1)
    double uniform01();
    // uniform in [lo, hi)
    double uniform(double lo, double hi);
    // standard normal (Box-Muller, pair-cached)
    double gaussian();
    // uniform integer in [0, n), n >= 1
    uint64_t bounded(uint64_t n);

private:
    std::mt19937_64 gen_;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace vlstm::rng
