#pragma once

#include <cstddef>
#include <span>

#include "latplan/nd/rng.hpp"
#include "latplan/nd/tensor.hpp"

namespace latplan::nd {

/// Clamp applied to probabilities before any log.
inline constexpr float kProbFloor = 1e-7f;

/// Gumbel-Max: argmax_j (g_j + logpi_j) with fresh Gumbel(0,1) noise. -inf entries are
/// allowed (zero-probability classes); NaN is rejected.
std::size_t gumbel_max_sample(std::span<const float> logpi, RngStream& rng);

/// Row-wise softmax((logits + noise) / tau) over the trailing `categories` entries.
/// `noise` must match `logits` in shape.
Tensor gumbel_softmax(const Tensor& logits, std::size_t categories, float tau, const Tensor& noise);
Tensor gumbel_softmax(const Tensor& logits, std::size_t categories, float tau, RngStream& rng);

/// Vector-Jacobian product of gumbel_softmax given its output `y`.
Tensor gumbel_softmax_backward(const Tensor& y, const Tensor& grad_y, std::size_t categories, float tau);

/// One-hot argmax per row (the tau -> 0 limit).
Tensor hard_one_hot(const Tensor& logits, std::size_t categories);

/// Row-wise softmax over trailing `categories`.
Tensor softmax_rows(const Tensor& logits, std::size_t categories);

struct LossValue {
    double value = 0.0;
    Tensor grad;  // d(value)/d(input), same shape as the input
};

/// Mean binary cross-entropy with probabilities clamped to [1e-7, 1-1e-7].
LossValue bce_loss(const Tensor& pred, const Tensor& target);

/// KL(q_row || Uniform(M)) summed over every row of q.
double gs_variational_loss(const Tensor& q, std::size_t categories);

/// Same loss evaluated at q = softmax(logits), with gradient w.r.t. the logits.
LossValue gs_variational_loss_logits(const Tensor& logits, std::size_t categories);

}  // namespace latplan::nd
