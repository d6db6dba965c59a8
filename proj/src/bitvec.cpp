#include "latplan/bitvec.hpp"

#include <fstream>
#include <stdexcept>

#include "latplan/nd/serialize.hpp"

namespace latplan {

namespace bin = nd::bin;

BitVector::BitVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto& b : bits_)
        if (b > 1) throw std::invalid_argument("bit value must be 0 or 1");
}

BitVector BitVector::from_string(std::string_view s) {
    BitVector b(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '0' && s[i] != '1') throw std::invalid_argument("bit string may only contain 0 and 1");
        b.bits_[i] = s[i] == '1';
    }
    return b;
}

BitVector BitVector::from_floats(std::span<const float> v) {
    BitVector b(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) b.bits_[i] = v[i] >= 0.5f;
    return b;
}

std::string BitVector::to_string() const {
    std::string s(bits_.size(), '0');
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i]) s[i] = '1';
    return s;
}

void BitVector::append_to(std::vector<float>& out) const {
    for (auto b : bits_) out.push_back(b ? 1.0f : 0.0f);
}

BitVector BitVector::concat(const BitVector& other) const {
    BitVector out = *this;
    out.bits_.insert(out.bits_.end(), other.bits_.begin(), other.bits_.end());
    return out;
}

std::size_t hamming(const BitVector& a, const BitVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("hamming: length mismatch");
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

std::size_t BitVectorHash::operator()(const BitVector& b) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ b.size();
    std::uint64_t word = 0;
    std::size_t k = 0;
    for (auto bit : b.bits()) {
        word |= static_cast<std::uint64_t>(bit) << k;
        if (++k == 64) {
            h = (h ^ word) * 0x100000001b3ULL;
            h ^= h >> 29;
            word = 0;
            k = 0;
        }
    }
    h = (h ^ word) * 0x100000001b3ULL;
    return static_cast<std::size_t>(h ^ (h >> 32));
}

void write_bitvectors(const std::string& path, std::span<const BitVector> vectors) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    const std::size_t n = vectors.empty() ? 0 : vectors.front().size();
    bin::write_magic(os, "LPB1");
    bin::write_u64(os, vectors.size());
    bin::write_u64(os, n);
    std::vector<char> packed((n + 7) / 8);
    for (const BitVector& v : vectors) {
        if (v.size() != n) throw std::invalid_argument("write_bitvectors: vectors differ in length");
        std::fill(packed.begin(), packed.end(), 0);
        for (std::size_t i = 0; i < n; ++i)
            if (v[i]) packed[i / 8] = static_cast<char>(packed[i / 8] | (1 << (i % 8)));
        os.write(packed.data(), static_cast<std::streamsize>(packed.size()));
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<BitVector> read_bitvectors(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path);
    bin::expect_magic(is, "LPB1", path);
    const std::uint64_t count = bin::read_u64(is);
    const std::uint64_t n = bin::read_u64(is);
    if (n > (1u << 20) || count > (std::uint64_t{1} << 32)) throw nd::FormatError("implausible bitvector header");
    std::vector<BitVector> out;
    out.reserve(count);
    std::vector<char> packed((n + 7) / 8);
    for (std::uint64_t c = 0; c < count; ++c) {
        if (!is.read(packed.data(), static_cast<std::streamsize>(packed.size())))
            throw nd::FormatError("truncated bitvector file");
        BitVector v(n);
        for (std::size_t i = 0; i < n; ++i) v.set(i, (static_cast<unsigned char>(packed[i / 8]) >> (i % 8)) & 1);
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace latplan
