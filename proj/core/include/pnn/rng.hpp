#ifndef PNN_RNG_HPP
#define PNN_RNG_HPP

#include <cstdint>

namespace pnn {

/// Deterministic 64-bit generator (xoshiro256++, Blackman/Vigna constants),
/// seeded through the splitmix64 finalizer. Same seed gives the same
/// sequence on every platform.
///
/// Independent sub-streams are derived with `stream(master, id)` so that
/// consumers (weight init, SIL generation, shuffling, ...) never share or
/// shift each other's draws.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1), 53-bit resolution.
    double next_double();

    /// Derived seed for sub-stream `id` of `master`:
    /// mix(master ^ mix(id)) with mix = splitmix64 finalizer.
    static std::uint64_t stream(std::uint64_t master, std::uint64_t id);

private:
    std::uint64_t state_[4];
};

// Fixed stream ids used across the library. New consumers get new ids;
// existing ids never change, so adding a consumer does not perturb others.
namespace stream_id {
inline constexpr std::uint64_t baseline_init = 1;
inline constexpr std::uint64_t shuffle = 2;
inline constexpr std::uint64_t partition_init_base = 100; // + partition index
inline constexpr std::uint64_t sil_base = 200;            // + boundary index
inline constexpr std::uint64_t phase_shuffle_base = 300;  // + phase index
inline constexpr std::uint64_t recovery_shuffle = 400;
} // namespace stream_id

} // namespace pnn

#endif
