#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include <hoi3d/common.hpp>

namespace hoi3d {

// All randomness in the library flows through this wrapper. std::mt19937_64
// has a fully specified output stream; the distributions are hand-rolled
// because the standard ones are implementation-defined and would break
// byte-identical reruns across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // [0, 1) with 53-bit resolution
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::size_t index(std::size_t n) {
        require(n > 0, "Rng::index: n must be positive");
        return static_cast<std::size_t>(engine_() % n);
    }

    // Box-Muller, one spare cached
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * kPi * u2);
        has_spare_ = true;
        return mag * std::cos(2.0 * kPi * u2);
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Per-item seed from one master seed and a stable item id. Independent of
// processing order, so parallel and sequential schedules agree.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view item_id) {
    return splitmix64(master ^ fnv1a64(item_id));
}

} // namespace hoi3d
