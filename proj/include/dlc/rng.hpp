#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string_view>

namespace dlc {

/// Deterministic, serializable random stream (xoshiro256** seeded via
/// splitmix64). Standard-library distributions are implementation-defined,
/// so sampling is done by hand to keep artifacts byte-identical across
/// platforms and library versions.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) { reseed(seed); }

    /// Independent substream identified by (seed, label). Used to decouple
    /// e.g. weight init, data order, and neighborhood sampling.
    static RngStream derived(std::uint64_t seed, std::string_view label) {
        std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the label
        for (char c : label) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
        RngStream s(seed ^ h);
        return s;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// N(0,1) via Box-Muller; the spare value is cached in the stream state.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Uniform integer in [0, n). n must be positive.
    std::size_t uniform_index(std::size_t n) {
        // Rejection-free modulo bias is negligible for desk-scale n; use
        // multiply-shift to stay exact and fast.
        return static_cast<std::size_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Full stream state: 4 words of xoshiro state, the Box-Muller spare
    /// (as raw bits), and the spare flag. Restoring it resumes the stream
    /// exactly.
    std::array<std::uint64_t, 6> state() const {
        std::uint64_t spare_bits;
        std::memcpy(&spare_bits, &spare_, sizeof spare_bits);
        return {state_[0], state_[1], state_[2], state_[3], spare_bits,
                static_cast<std::uint64_t>(has_spare_ ? 1 : 0)};
    }

    void restore(const std::array<std::uint64_t, 6>& s) {
        state_[0] = s[0];
        state_[1] = s[1];
        state_[2] = s[2];
        state_[3] = s[3];
        std::memcpy(&spare_, &s[4], sizeof spare_);
        has_spare_ = s[5] != 0;
    }

  private:
    void reseed(std::uint64_t seed) {
        // splitmix64 expansion of the seed into the xoshiro state
        std::uint64_t x = seed;
        for (auto& w : state_) {
            x += 0x9e3779b97f4a7c15ull;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
            w = z ^ (z >> 31);
        }
        has_spare_ = false;
        spare_ = 0.0;
    }

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4] = {};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace dlc
