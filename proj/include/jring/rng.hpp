#pragma once

#include <cstdint>
#include <random>

namespace jring {

// Seeded uniforms/normals on top of mt19937_64. std::*_distribution output is
// implementation-defined, so the transforms are spelled out here to keep
// seeded runs reproducible across standard libraries.
class rng64 {
  public:
    explicit rng64(std::uint64_t seed) : eng_(seed) {}

    // [0, 1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double normal();

    // [0, bound)
    std::uint64_t integer(std::uint64_t bound);

  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace jring
