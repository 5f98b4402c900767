#include "vlstm/rng.hpp"

#include <cmath>
#include <numbers>

namespace vlstm::rng {

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

uint64_t fnv1a(std::string_view s) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace

uint64_t derive(uint64_t seed, std::string_view label) {
    return splitmix64(seed ^ splitmix64(fnv1a(label)));
}

uint64_t derive(uint64_t seed, uint64_t index) {
    return splitmix64(seed ^ splitmix64(index + 0x51ED2701D0F41337ULL));
}

double Stream::uniform01() {
    // 53 high bits -> double in [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Stream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
}

double Stream::gaussian() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // u1 in (0, 1] to keep the log finite
    double u1 = 1.0 - uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
}

uint64_t Stream::bounded(uint64_t n) {
    // rejection sampling on the top of the range; unbiased
    uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % n);
    uint64_t x;
    do {
        x = gen_();
    } while (x >= limit);
    return x % n;
}

}  // namespace vlstm::rng
