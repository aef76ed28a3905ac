#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace fuel {

/**
 * Counter-based random streams (Philox4x32-10).
 *
 * Every draw is a pure function of (master_seed, stream_id, path, block), so
 * a path's sequence does not depend on which worker thread produces it or in
 * which order paths are visited.  Ensembles regenerate bit-identically from
 * their seed under any thread count, which is what the reproducibility
 * guarantees of the toolkit rest on.
 *
 * Stream ids separate independent uses of the same master seed (shock nodes,
 * fuel nodes, bridge refinements, inner continuation paths, ...).
 */
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

struct philox_key {
    std::uint32_t k0, k1;
};

// 64-bit key for one (master_seed, stream_id) pair.
inline philox_key derive_key(std::uint64_t master_seed, std::uint64_t stream_id) {
    std::uint64_t k = splitmix64(master_seed ^ splitmix64(stream_id));
    return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

// One Philox4x32-10 block: 128-bit counter -> 128 output bits.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, philox_key key) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    std::uint32_t k0 = key.k0, k1 = key.k1;
    for (int round = 0; round < 10; ++round) {
        std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
        std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
        std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
        k0 += W0;
        k1 += W1;
    }
    return ctr;
}

inline double to_unit_interval(std::uint32_t hi, std::uint32_t lo) {
    // 53 significant bits, offset by half an ulp: strictly inside (0,1).
    std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Predefined stream ids.  Values are arbitrary but frozen: changing them
// changes every seeded result.
enum stream : std::uint64_t {
    shock_nodes = 0x01,
    fuel_nodes = 0x02,
    bridge_cells = 0x03,
    inner_paths = 0x04,
    challenger_draws = 0x05,
    offset_calibration = 0x06,
    snell_paths = 0x07,
    oracle_draws = 0x08,
    inner_bridge = 0x09,
};

}  // namespace rng

/// Uniform(0,1) draws for one (seed, stream, path) triple; two per block.
class UniformStream {
  public:
    UniformStream(std::uint64_t master_seed, std::uint64_t stream_id, std::uint64_t path)
        : key_(rng::derive_key(master_seed, stream_id)),
          path_lo_(static_cast<std::uint32_t>(path)),
          path_hi_(static_cast<std::uint32_t>(path >> 32)) {}

    double next() {
        if (phase_ == 0) {
            block_ = rng::philox4x32({path_lo_, path_hi_, block_lo_, block_hi_}, key_);
            if (++block_lo_ == 0) ++block_hi_;
            phase_ = 1;
            return rng::to_unit_interval(block_[0], block_[1]);
        }
        phase_ = 0;
        return rng::to_unit_interval(block_[2], block_[3]);
    }

  private:
    rng::philox_key key_;
    std::uint32_t path_lo_, path_hi_;
    std::uint32_t block_lo_ = 0, block_hi_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int phase_ = 0;
};

/// Standard normal draws via Box-Muller on Philox output; two per block.
class NormalStream {
  public:
    NormalStream(std::uint64_t master_seed, std::uint64_t stream_id, std::uint64_t path)
        : uniforms_(master_seed, stream_id, path) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniforms_.next();
        double u2 = uniforms_.next();
        double r = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(angle);
        have_spare_ = true;
        return r * std::cos(angle);
    }

  private:
    UniformStream uniforms_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace fuel
