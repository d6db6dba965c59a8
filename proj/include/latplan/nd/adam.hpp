#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "latplan/nd/tensor.hpp"

namespace latplan::nd {

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::uint64_t t = 0;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

/// Bias-corrected Adam update using each parameter's gradient buffer. Moment buffers
/// are allocated on the first call.
void adam_step(std::span<Tensor* const> params, AdamState& state, float lr);

}  // namespace latplan::nd
