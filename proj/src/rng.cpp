#include "regnoise/rng.hpp"

#include "regnoise/errors.hpp"

#include <cmath>
#include <numbers>

namespace regnoise {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(prod >> 32);
    lo = static_cast<std::uint32_t>(prod);
}

// 53-bit uniform in (0, 1): never 0, so log() is safe.
double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi >> 5) << 26) | (lo >> 6);
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

} // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

std::array<std::uint32_t, 4> RngStream::next_block() {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
        static_cast<std::uint32_t>(path_index_), static_cast<std::uint32_t>(path_index_ >> 32)};
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(master_seed_),
                                              static_cast<std::uint32_t>(master_seed_ >> 32)};
    ++counter_;
    return philox4x32(ctr, key);
}

std::array<double, 2> RngStream::next_normal_pair() {
    const auto w = next_block();
    const double u1 = to_unit(w[0], w[1]);
    const double u2 = to_unit(w[2], w[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

double RngStream::next_uniform() {
    const auto w = next_block();
    return to_unit(w[0], w[1]);
}

WienerIncrement wiener_increments(RngStream& rng, std::size_t channels, double dt) {
    if (!(dt > 0.0)) throw ValidationError("wiener_increments requires dt > 0");
    WienerIncrement w;
    w.dt = dt;
    w.dW.resize(channels);
    const double sd = std::sqrt(dt);
    for (std::size_t k = 0; k < channels; k += 2) {
        const auto z = rng.next_normal_pair();
        w.dW[k] = sd * z[0];
        if (k + 1 < channels) w.dW[k + 1] = sd * z[1];
    }
    return w;
}

} // namespace regnoise
