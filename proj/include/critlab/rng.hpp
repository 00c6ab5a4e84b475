#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace critlab {

/// Counter-based random stream (Philox4x32-10).
///
/// A stream is addressed by (seed, stream_id). Draw number k of a stream is a
/// pure function of (seed, stream_id, k), so ensembles can be split across
/// workers by stream id without sequence overlap and results do not depend on
/// scheduling. Each stream has a period of 2^64 blocks of 128 bits.
///
/// All conversions to floating point and bounded integers are done here, not
/// through <random> distributions, whose output is implementation-defined.
class RngStream {
public:
    using result_type = std::uint64_t;

    static constexpr std::string_view algorithm = "philox4x32-10";

    explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0) noexcept
        : seed_(seed), stream_(stream_id) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (have_ == 0) {
            refill();
        }
        --have_;
        return buffer_[have_];
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound) noexcept;

    bool bernoulli(double p) noexcept { return uniform() < p; }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_; }

    /// Number of 128-bit blocks consumed so far.
    std::uint64_t blocks_used() const noexcept { return counter_; }

    /// The raw block function, exposed for known-answer tests.
    static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) noexcept;

private:
    void refill() noexcept;

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int have_ = 0;
};

/// Stream for ensemble member `index` derived from a parent stream. The child
/// id is a bijective mix of (parent id + (index + 1) * golden ratio), so
/// children of one parent never collide and nested derivation stays spread
/// over the full 64-bit id space.
RngStream substream(const RngStream& parent, std::uint64_t index) noexcept;

}  // namespace critlab
