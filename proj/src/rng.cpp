#include "mashvco/rng.hpp"

#include <cmath>
#include <numbers>

namespace mashvco::rng {
namespace {

std::uint64_t splitmix_step(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

std::uint64_t subseed(std::uint64_t seed, std::string_view role) {
    // FNV-1a over the role keeps distinct roles on distinct streams even
    // when they share a prefix.
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : role) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    std::uint64_t s = seed ^ h;
    splitmix_step(s);
    splitmix_step(s);
    return s;
}

std::uint64_t Stream::next_u64() { return splitmix_step(state_); }

double Stream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Stream::gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

} // namespace mashvco::rng
