#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace latplan {

/// Fixed-length boolean vector: a propositional state in the latent space.
class BitVector {
public:
    BitVector() = default;
    explicit BitVector(std::size_t n) : bits_(n, 0) {}
    explicit BitVector(std::vector<std::uint8_t> bits);

    /// Parses "0101..." (characters other than 0/1 are rejected).
    static BitVector from_string(std::string_view s);
    /// Thresholds each value at 0.5.
    static BitVector from_floats(std::span<const float> v);

    std::size_t size() const noexcept { return bits_.size(); }
    bool operator[](std::size_t i) const { return bits_[i] != 0; }
    void set(std::size_t i, bool v) { bits_.at(i) = v ? 1 : 0; }
    void flip(std::size_t i) { bits_.at(i) ^= 1; }

    std::span<const std::uint8_t> bits() const noexcept { return bits_; }
    std::string to_string() const;
    void append_to(std::vector<float>& out) const;
    /// Concatenation, e.g. the (s,t) input of the action discriminator.
    BitVector concat(const BitVector& other) const;

    friend auto operator<=>(const BitVector&, const BitVector&) = default;
    friend bool operator==(const BitVector&, const BitVector&) = default;

private:
    std::vector<std::uint8_t> bits_;
};

using LatentBitVector = BitVector;

/// Number of positions where the vectors differ. Throws on length mismatch.
std::size_t hamming(const BitVector& a, const BitVector& b);

struct BitVectorHash {
    std::size_t operator()(const BitVector& b) const noexcept;
};

/// "LPB1" file: count, N, then each vector packed LSB-first into ceil(N/8) bytes.
void write_bitvectors(const std::string& path, std::span<const BitVector> vectors);
std::vector<BitVector> read_bitvectors(const std::string& path);

}  // namespace latplan
