#pragma once

#include <cstdint>
#include <vector>

#include "latplan/ama2.hpp"

namespace latplan::testing {

/// Every vector of `bits` bits, labelled positive when bits 0..7 have even parity.
/// `positives` labelled examples; the mixed set holds `mixed_half` unseen positives and
/// as many negatives.
struct PlantedParity {
    std::vector<BitVector> labelled, mixed, all_pos, all_neg;
};

inline bool even_parity8(const BitVector& b) {
    bool p = false;
    for (std::size_t i = 0; i < 8; ++i) p ^= b[i];
    return !p;
}

inline PlantedParity planted_parity(std::size_t bits, std::size_t positives, std::size_t mixed_half,
                                    nd::RngStream& rng) {
    PlantedParity t;
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << bits); ++v) {
        BitVector b(bits);
        for (std::size_t j = 0; j < bits; ++j) b.set(j, (v >> j) & 1U);
        (even_parity8(b) ? t.all_pos : t.all_neg).push_back(std::move(b));
    }
    auto pos = t.all_pos, neg = t.all_neg;
    rng.shuffle(pos.begin(), pos.end());
    rng.shuffle(neg.begin(), neg.end());
    const auto p = static_cast<std::ptrdiff_t>(positives), h = static_cast<std::ptrdiff_t>(mixed_half);
    t.labelled.assign(pos.begin(), pos.begin() + p);
    t.mixed.assign(pos.begin() + p, pos.begin() + p + h);
    t.mixed.insert(t.mixed.end(), neg.begin(), neg.begin() + h);
    return t;
}

inline std::vector<DiscArch> parity_candidates() { return {{300, 1, 0.0f}}; }

inline PuConfig parity_pu_config() {
    PuConfig c;
    c.batch_size = 100;
    return c;
}

}  // namespace latplan::testing
