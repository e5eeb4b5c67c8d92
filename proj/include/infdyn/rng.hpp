#pragma once

// Deterministic, splittable random streams built on the splitmix64 mixer.
// The same seed yields the same draws on every platform (no dependence on
// library distributions), and independent substreams are derived by mixing a
// stream id into the seed. Reports quote (seed, stream) so every sampled
// quantity is bit-reproducible.

#include <complex>
#include <cstdint>

namespace infdyn {

struct RandomStream {
    std::uint64_t state;

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0)
        : state(mix(seed) ^ mix(mix(stream))) {}

    std::uint64_t next_u64() {
        state += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [-1, 1).
    double next_symmetric() { return 2.0 * next_unit() - 1.0; }

    // Uniform on the closed disk of the given radius.
    std::complex<double> next_disk(double radius) {
        double r = radius * std::sqrt(next_unit());
        double t = 6.283185307179586476925286766559 * next_unit();
        return {r * std::cos(t), r * std::sin(t)};
    }

    // Uniform on the circle of the given radius.
    std::complex<double> next_circle(double radius) {
        double t = 6.283185307179586476925286766559 * next_unit();
        return {radius * std::cos(t), radius * std::sin(t)};
    }

    RandomStream split(std::uint64_t id) const {
        RandomStream s(0);
        s.state = mix(state ^ mix(id));
        return s;
    }
};

} // namespace infdyn
