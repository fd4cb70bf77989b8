#pragma once

#include <cstdint>

namespace qact {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based stream: (seed, stream) pairs give independent sequences, so
// per-sample draws never depend on scheduling order.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : base_(splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL))) {}

    std::uint64_t next_u64() { return splitmix64(base_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

}  // namespace qact
