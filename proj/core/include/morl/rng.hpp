#pragma once

#include <bit>
#include <cstdint>
#include <span>

namespace morl {

/// Identifies one logical random substream. Two distinct lanes under the same
/// master seed yield independent streams, and the sequence drawn from a lane
/// is a pure function of (master_seed, lane). This is what makes batch
/// sampling reproducible regardless of scheduling: every trajectory owns one
/// lane, indexed by (outer iteration, phase, trajectory index).
struct Lane {
    std::uint64_t outer = 0;
    std::uint64_t phase = 0;
    std::uint64_t index = 0;
};

namespace phase {
inline constexpr std::uint64_t kReturnBatch = 1;  // trajectories behind the return estimate
inline constexpr std::uint64_t kMlmcLevelDraw = 2;
inline constexpr std::uint64_t kMlmcBatch = 3;
inline constexpr std::uint64_t kEval = 4;  // harness measurement campaigns
inline constexpr std::uint64_t kSimulate = 5;
inline constexpr std::uint64_t kInnerBase = 1024;

/// Lane phase for inner-loop step n (fresh trajectories per step).
inline constexpr std::uint64_t inner(std::uint64_t n) { return kInnerBase + n; }
}  // namespace phase

/// Deterministic counter-based stream (splitmix64 over a lane-keyed state).
/// Cheap to construct, no shared state, identical output on every platform.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, Lane lane)
        : state_(derive_key(master_seed, lane)) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return finalize(state_);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Categorical draw by cumulative-sum inversion, scanning left to right.
    /// The scan order fixes the tie convention at bin boundaries, so results
    /// are bit-reproducible across platforms.
    int categorical(std::span<const double> probs) {
        const double u = next_double();
        double cum = 0.0;
        const int n = static_cast<int>(probs.size());
        for (int i = 0; i < n; ++i) {
            cum += probs[i];
            if (u < cum) return i;
        }
        return n - 1;  // guards accumulated rounding below 1
    }

    /// Level draw with Pr(Q = q) = 2^-q for q = 1, 2, ...
    /// Implemented by counting leading zero bits of one uniform word, which
    /// realizes the distribution exactly with no floating-point boundary.
    int geometric_level() {
        return std::countl_zero(next_u64()) + 1;
    }

private:
    static std::uint64_t finalize(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    static std::uint64_t absorb(std::uint64_t h, std::uint64_t v) {
        return finalize(h + 0x9E3779B97F4A7C15ull + finalize(v + 0xD1B54A32D192ED03ull));
    }

    static std::uint64_t derive_key(std::uint64_t seed, Lane lane) {
        std::uint64_t h = finalize(seed + 0x2545F4914F6CDD1Dull);
        h = absorb(h, lane.outer);
        h = absorb(h, lane.phase);
        h = absorb(h, lane.index);
        return h;
    }

    std::uint64_t state_;
};

/// Bundles the (seed, outer iteration, phase) triple shared by a batch; the
/// per-trajectory index completes the lane.
struct LaneBlock {
    std::uint64_t master_seed = 0;
    std::uint64_t outer = 0;
    std::uint64_t phase = 0;

    RngStream stream(std::uint64_t index) const {
        return RngStream(master_seed, Lane{outer, phase, index});
    }
};

} // namespace morl
