#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>

namespace latplan::nd {

/// Counter-based random stream. Draw i is a pure function of (seed, i), so a copied
/// stream replays exactly the same draws as the original.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0, std::uint64_t counter = 0) noexcept
        : seed_(seed), counter_(counter) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept;
    /// Uniform on the open interval (0, 1).
    double uniform() noexcept;
    double normal() noexcept;
    /// Standard Gumbel(0,1) draw, -log(-log(u)).
    double gumbel() noexcept;
    /// Uniform integer in [0, n).
    std::size_t below(std::size_t n) noexcept;

    /// Independent child stream keyed by `stream`; does not advance this stream.
    RngStream fork(std::uint64_t stream) const noexcept;

    template <class It>
    void shuffle(It first, It last) noexcept {
        const auto n = static_cast<std::size_t>(last - first);
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = below(i);
            std::swap(first[i - 1], first[j]);
        }
    }

    friend bool operator==(const RngStream&, const RngStream&) = default;

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
};

}  // namespace latplan::nd
