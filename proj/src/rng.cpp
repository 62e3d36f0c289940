#include "clab/rng.hpp"

#include <cmath>
#include <numbers>

#include "clab/common.hpp"

namespace clab {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline std::array<std::uint32_t, 4> philox_round(const std::array<std::uint32_t, 4>& c,
                                                 const std::array<std::uint32_t, 2>& k) {
    const std::uint64_t p0 = std::uint64_t(kPhiloxM0) * c[0];
    const std::uint64_t p1 = std::uint64_t(kPhiloxM1) * c[2];
    return {std::uint32_t(p1 >> 32) ^ c[1] ^ k[0], std::uint32_t(p1),
            std::uint32_t(p0 >> 32) ^ c[3] ^ k[1], std::uint32_t(p0)};
}

// 53-bit mantissa uniforms; u1 lands in (0,1] so log(u1) below is finite.
inline double u64_to_unit_open(std::uint64_t x) {
    return double((x >> 11) + 1) * 0x1.0p-53;
}
inline double u64_to_unit_half_open(std::uint64_t x) {
    return double(x >> 11) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 9; ++round) {
        counter = philox_round(counter, key);
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return philox_round(counter, key);
}

std::array<std::uint32_t, 4> CounterRng::block(std::uint64_t path, std::uint64_t step,
                                               std::uint32_t pair_index) const {
    require(path <= 0xFFFFFFFFull, "rng: path index exceeds 32-bit counter field");
    require(step <= 0xFFFFFFFFull, "rng: step index exceeds 32-bit counter field");
    const std::array<std::uint32_t, 4> counter = {std::uint32_t(path), std::uint32_t(step),
                                                  pair_index, stream_};
    const std::array<std::uint32_t, 2> key = {std::uint32_t(seed_), std::uint32_t(seed_ >> 32)};
    return philox4x32(counter, key);
}

void CounterRng::fill_normals(std::uint64_t path, std::uint64_t step,
                              std::span<double> out) const {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t base = 0; base < out.size(); base += 2) {
        const auto b = block(path, step, std::uint32_t(base / 2));
        const std::uint64_t a = (std::uint64_t(b[0]) << 32) | b[1];
        const std::uint64_t c = (std::uint64_t(b[2]) << 32) | b[3];
        const double u1 = u64_to_unit_open(a);
        const double u2 = u64_to_unit_half_open(c);
        const double r = std::sqrt(-2.0 * std::log(u1));
        out[base] = r * std::cos(two_pi * u2);
        if (base + 1 < out.size()) out[base + 1] = r * std::sin(two_pi * u2);
    }
}

double CounterRng::normal(std::uint64_t path, std::uint64_t step, std::uint32_t slot) const {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const auto b = block(path, step, slot / 2);
    const std::uint64_t a = (std::uint64_t(b[0]) << 32) | b[1];
    const std::uint64_t c = (std::uint64_t(b[2]) << 32) | b[3];
    const double u1 = u64_to_unit_open(a);
    const double u2 = u64_to_unit_half_open(c);
    const double r = std::sqrt(-2.0 * std::log(u1));
    return (slot % 2 == 0) ? r * std::cos(two_pi * u2) : r * std::sin(two_pi * u2);
}

void CounterRng::fill_uniforms(std::uint64_t path, std::uint64_t step,
                               std::span<double> out) const {
    for (std::size_t base = 0; base < out.size(); base += 2) {
        const auto b = block(path, step, std::uint32_t(base / 2));
        const std::uint64_t a = (std::uint64_t(b[0]) << 32) | b[1];
        const std::uint64_t c = (std::uint64_t(b[2]) << 32) | b[3];
        out[base] = u64_to_unit_half_open(a);
        if (base + 1 < out.size()) out[base + 1] = u64_to_unit_half_open(c);
    }
}

}  // namespace clab
