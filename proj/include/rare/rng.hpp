#pragma once

#include <cstdint>
#include <random>

namespace rare {

using Engine = std::mt19937_64;

/// Purpose of a stream, folded into its key so that integration noise,
/// resampling draws and clone perturbations never share a sequence.
enum class StreamTag : std::uint64_t {
    Integrate = 1,
    Resample = 2,
    Perturb = 3,
    Initial = 4,
    Control = 5,
    Sample = 6,
};

/// Identifies one independent random stream. Streams are derived from the
/// key alone, so the numbers a particle sees do not depend on which worker
/// advances it or in what order.
struct StreamKey {
    std::uint64_t seed = 0;
    std::uint64_t experiment = 0;
    std::uint64_t particle = 0;
    std::uint64_t epoch = 0;
    StreamTag tag = StreamTag::Integrate;
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_key(const StreamKey& key) noexcept {
    std::uint64_t h = splitmix64(key.seed);
    h = splitmix64(h ^ key.experiment);
    h = splitmix64(h ^ key.particle);
    h = splitmix64(h ^ key.epoch);
    return splitmix64(h ^ static_cast<std::uint64_t>(key.tag));
}

inline Engine make_stream(const StreamKey& key) { return Engine(hash_key(key)); }

/// Uniform on [0,1) with 53 random bits.
inline double uniform01(Engine& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace rare
