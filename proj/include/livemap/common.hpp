#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace livemap {

// Error taxonomy shared by every module. Callers catch by base class when they
// only need to report.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NoDepthError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BusyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field_path, const std::string& message)
        : std::runtime_error(field_path + ": " + message), path_(std::move(field_path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct WorldPoint {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const WorldPoint&, const WorldPoint&) = default;
};

inline double ground_distance_sq(const WorldPoint& a, const WorldPoint& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

inline double ground_distance(const WorldPoint& a, const WorldPoint& b) {
    return std::sqrt(ground_distance_sq(a, b));
}

/// SplitMix64 finalizer. Used both for seed derivation and as a counter-based
/// generator where a full engine per draw would be wasteful.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Subsystems that receive independent streams from one master seed.
enum class SeedStream : std::uint64_t {
    World = 1,
    Radio = 2,
    Policy = 3,
    Exploration = 4,
    Measurement = 5,
    Sensing = 6,
    Baseline = 7,
};

/// Seed for a subsystem: splitmix64(master XOR (stream * golden-ratio constant)).
/// Changing one subsystem's draws never perturbs another's.
constexpr std::uint64_t derive_seed(std::uint64_t master, SeedStream stream) noexcept {
    return splitmix64(master ^ (static_cast<std::uint64_t>(stream) * 0x9E3779B97F4A7C15ull));
}

/// Uniform in [0, 1) from a 64-bit hash.
inline double unit_from_bits(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Standard normal from a (key, counter) pair via Box-Muller. Stateless.
double hashed_normal(std::uint64_t key, std::uint64_t counter) noexcept;

} // namespace livemap
