#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace regnoise {

/// Philox4x32-10 block function: maps (counter, key) to four 32-bit words.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Counter-based normal stream. The n-th draw is a pure function of
/// (master_seed, path_index, n); streams share no state.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t path_index, std::uint64_t counter = 0)
        : master_seed_(master_seed), path_index_(path_index), counter_(counter) {}

    std::uint64_t master_seed() const noexcept { return master_seed_; }
    std::uint64_t path_index() const noexcept { return path_index_; }
    /// Number of Philox blocks consumed so far.
    std::uint64_t counter() const noexcept { return counter_; }

    /// Two independent standard normals from the next block.
    std::array<double, 2> next_normal_pair();
    /// Uniform on (0, 1) with 53 random bits; consumes one block.
    double next_uniform();

private:
    std::array<std::uint32_t, 4> next_block();

    std::uint64_t master_seed_;
    std::uint64_t path_index_;
    std::uint64_t counter_;
};

/// Increments of a K-channel Wiener process over one step.
struct WienerIncrement {
    std::vector<double> dW;
    double dt = 0.0;
};

/// K i.i.d. Normal(0, dt) samples. Each step consumes ceil(K/2) blocks, so the
/// k-th step's increment depends only on the stream position.
WienerIncrement wiener_increments(RngStream& rng, std::size_t channels, double dt);

} // namespace regnoise
