#include "latplan/nd/rng.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace latplan::nd {

namespace {
// splitmix64 finalizer
std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace

std::uint64_t RngStream::next_u64() noexcept {
    const std::uint64_t key = mix(seed_);
    return mix(key ^ (counter_++ * 0xd1342543de82ef95ULL));
}

double RngStream::uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::gumbel() noexcept {
    return -std::log(-std::log(uniform()));
}

std::size_t RngStream::below(std::size_t n) noexcept {
    if (n <= 1) return 0;
    // Lemire's multiply-shift; bias is below 2^-64 * n and irrelevant here.
    const auto wide = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::size_t>(wide >> 64);
}

RngStream RngStream::fork(std::uint64_t stream) const noexcept {
    return RngStream(mix(seed_ ^ mix(stream + 0x5851f42d4c957f2dULL)), 0);
}

}  // namespace latplan::nd
