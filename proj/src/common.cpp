#include "livemap/common.hpp"

#include <numbers>

namespace livemap {

double hashed_normal(std::uint64_t key, std::uint64_t counter) noexcept {
    const std::uint64_t a = splitmix64(key ^ splitmix64(counter));
    const std::uint64_t b = splitmix64(a);
    // Shift u1 into (0, 1] so the log is finite.
    const double u1 = 1.0 - unit_from_bits(a);
    const double u2 = unit_from_bits(b);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace livemap
