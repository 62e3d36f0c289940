#ifndef CLAB_RNG_HPP
#define CLAB_RNG_HPP

#include <array>
#include <cstdint>
#include <span>

namespace clab {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// A 128-bit counter and 64-bit key map to 128 pseudo-random bits with no
// sequential state, so any (path, step, slot) coordinate can be generated
// independently; simulations are reproducible for any worker count.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// Distinct stream ids keep sub-experiments that share a master seed from
// reusing each other's noise.
enum class NoiseStream : std::uint32_t {
    pair_simulation = 0,
    ensemble_x = 1,
    ensemble_y = 2,
    bootstrap = 3,
    init_sampling = 4,
    probe_points = 5,
    stencil = 6,
    equilibrium = 7,
    scratch = 8,
};

// Gaussian/uniform variates addressed by (seed, stream, path, step, slot).
class CounterRng {
  public:
    CounterRng(std::uint64_t seed, NoiseStream stream)
        : seed_(seed), stream_(static_cast<std::uint32_t>(stream)) {}

    // Standard normals for one (path, step) cell, slots [0, out.size()).
    void fill_normals(std::uint64_t path, std::uint64_t step, std::span<double> out) const;

    double normal(std::uint64_t path, std::uint64_t step, std::uint32_t slot) const;

    // Uniforms on [0, 1).
    void fill_uniforms(std::uint64_t path, std::uint64_t step, std::span<double> out) const;

    std::uint64_t seed() const { return seed_; }

  private:
    std::array<std::uint32_t, 4> block(std::uint64_t path, std::uint64_t step,
                                       std::uint32_t pair_index) const;

    std::uint64_t seed_;
    std::uint32_t stream_;
};

}  // namespace clab

#endif
