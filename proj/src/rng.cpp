#include "jring/rng.hpp"

#include <cmath>
#include <numbers>

namespace jring {

double rng64::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
}

std::uint64_t rng64::integer(std::uint64_t bound) {
    if (bound == 0) return 0;
    const auto v = static_cast<std::uint64_t>(uniform() * static_cast<double>(bound));
    return v >= bound ? bound - 1 : v;
}

}  // namespace jring
