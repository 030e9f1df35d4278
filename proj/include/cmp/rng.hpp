#pragma once

#include <cstdint>
#include <random>

namespace cmp {

/// Thin wrapper over mt19937_64 with platform-independent real draws
/// (std::uniform_real_distribution is implementation-defined, which would
/// break bit-reproducible fixtures).
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next() { return gen_(); }

    double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    bool flip() { return (gen_() & 1ull) != 0; }

    int index(int n) { return static_cast<int>(gen_() % static_cast<uint64_t>(n)); }

private:
    std::mt19937_64 gen_;
};

}  // namespace cmp
