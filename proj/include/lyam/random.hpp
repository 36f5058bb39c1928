#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace lyam {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// A stream is identified by a 64-bit key (the seed) and a 64-bit stream id;
/// the i-th block of output depends only on (key, stream, i). Substreams are
/// therefore independent of the order in which trials are scheduled.
///
/// Satisfies UniformRandomBitGenerator, but the distribution helpers below are
/// implemented here so sequences are bit-identical across standard libraries.
class Philox {
public:
    using result_type = std::uint32_t;

    explicit Philox(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    std::uint64_t next_u64() noexcept;
    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) noexcept;
    /// Standard normal via the Box-Muller transform.
    double normal() noexcept;
    /// Gamma(shape, 1) via Marsaglia-Tsang.
    double gamma(double shape) noexcept;
    /// Student-t with the given degrees of freedom.
    double student_t(double dof) noexcept;

    /// Independent generator sharing this key, addressed by a derived stream id.
    Philox substream(std::uint64_t id) const noexcept;

    std::uint64_t seed() const noexcept {
        return static_cast<std::uint64_t>(key_[0]) | (static_cast<std::uint64_t>(key_[1]) << 32);
    }
    std::uint64_t stream() const noexcept { return stream_; }
    /// Number of 128-bit blocks consumed so far.
    std::uint64_t position() const noexcept { return counter_; }

    /// The raw block for (key, stream, index); exposed for tests.
    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 2> key,
                                              std::array<std::uint32_t, 4> counter) noexcept;

private:
    void refill() noexcept;

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int buffered_ = 0;
    bool has_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

/// Stream ids for the independent random inputs of one trial.
enum class StreamPurpose : std::uint64_t {
    Init = 1,
    Data = 2,
    ValidationData = 3,
    Poison = 4,
    GradientNoise = 5,
    Minibatch = 6,
    Lipschitz = 7,
};

inline Philox make_stream(std::uint64_t seed, StreamPurpose purpose) noexcept {
    return Philox(seed, static_cast<std::uint64_t>(purpose));
}

}  // namespace lyam
