#pragma once
#include <cstdint>
#include <string_view>

namespace mashvco::rng {

// Independent stream seed derived from (seed, role). A given pair always
// yields the same draws no matter which other roles a run consumes, so e.g.
// a single-oscillator run and a pseudo-differential run see identical
// stage-1 start phases for the shared role names.
std::uint64_t subseed(std::uint64_t seed, std::string_view role);

// splitmix64-based generator; gaussian() is Box-Muller so sequences stay
// identical across standard library implementations.
class Stream {
public:
    explicit Stream(std::uint64_t s) : state_(s) {}
    std::uint64_t next_u64();
    double uniform();  // [0, 1)
    double gaussian(); // standard normal
private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace mashvco::rng
