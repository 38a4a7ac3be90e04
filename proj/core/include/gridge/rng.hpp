#ifndef GRIDGE_RNG_HPP
#define GRIDGE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace gridge {

/// Counter-based SplitMix64 stream with Box-Muller Gaussians.
///
/// Substreams are derived from (seed, index), so replication i always sees
/// the same draws no matter how replications are scheduled across threads.
/// The generator is specified entirely by this file; it does not depend on
/// the standard library's distribution implementations.
class SplitMixRng {
public:
    explicit SplitMixRng(std::uint64_t seed) : state_(seed) {}

    static std::uint64_t mix(std::uint64_t value) {
        value += 0x9e3779b97f4a7c15ULL;
        value = (value ^ (value >> 30)) * 0xbf58476d1ce4e5b9ULL;
        value = (value ^ (value >> 27)) * 0x94d049bb133111ebULL;
        return value ^ (value >> 31);
    }

    /// Stream for one replication: stateless in everything but (seed, index).
    static SplitMixRng substream(std::uint64_t seed, std::uint64_t index) {
        return SplitMixRng(mix(mix(seed) ^ (index + 0x9e3779b97f4a7c15ULL)));
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform draw strictly inside (0, 1).
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::uint64_t state_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace gridge

#endif
