#include "latplan/nd/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace latplan::nd {

namespace {

void check_rows(const Tensor& t, std::size_t categories) {
    if (categories == 0 || t.size() % categories != 0)
        throw ShapeError(-1, {categories}, t.shape(), "trailing category axis");
}

}  // namespace

std::size_t gumbel_max_sample(std::span<const float> logpi, RngStream& rng) {
    if (logpi.empty()) throw std::invalid_argument("gumbel_max_sample: empty distribution");
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < logpi.size(); ++j) {
        if (std::isnan(logpi[j])) throw std::invalid_argument("gumbel_max_sample: NaN log-probability");
        // Draw for every class so the stream advances identically regardless of values.
        const double score = rng.gumbel() + static_cast<double>(logpi[j]);
        if (score > best_score) {
            best_score = score;
            best = j;
        }
    }
    return best;
}

Tensor softmax_rows(const Tensor& logits, std::size_t categories) {
    check_rows(logits, categories);
    Tensor out(logits.shape());
    const float* x = logits.ptr();
    float* y = out.ptr();
    for (std::size_t r = 0; r < logits.size() / categories; ++r) {
        const float* xr = x + r * categories;
        float* yr = y + r * categories;
        const float mx = *std::max_element(xr, xr + categories);
        double sum = 0.0;
        for (std::size_t j = 0; j < categories; ++j) {
            yr[j] = std::exp(xr[j] - mx);
            sum += yr[j];
        }
        for (std::size_t j = 0; j < categories; ++j) yr[j] = static_cast<float>(yr[j] / sum);
    }
    return out;
}

Tensor gumbel_softmax(const Tensor& logits, std::size_t categories, float tau, const Tensor& noise) {
    if (!(tau > 0.0f)) throw std::invalid_argument("gumbel_softmax: temperature must be positive");
    if (noise.shape() != logits.shape()) throw ShapeError(-1, logits.shape(), noise.shape(), "gumbel noise");
    Tensor z(logits.shape());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = (logits[i] + noise[i]) / tau;
    return softmax_rows(z, categories);
}

Tensor gumbel_softmax(const Tensor& logits, std::size_t categories, float tau, RngStream& rng) {
    Tensor noise(logits.shape());
    for (float& g : noise.data()) g = static_cast<float>(rng.gumbel());
    return gumbel_softmax(logits, categories, tau, noise);
}

Tensor gumbel_softmax_backward(const Tensor& y, const Tensor& grad_y, std::size_t categories, float tau) {
    check_rows(y, categories);
    Tensor gx(y.shape());
    for (std::size_t r = 0; r < y.size() / categories; ++r) {
        const float* yr = y.ptr() + r * categories;
        const float* gr = grad_y.ptr() + r * categories;
        double dot = 0.0;
        for (std::size_t j = 0; j < categories; ++j) dot += static_cast<double>(yr[j]) * gr[j];
        for (std::size_t j = 0; j < categories; ++j)
            gx[r * categories + j] = static_cast<float>(yr[j] * (gr[j] - dot) / tau);
    }
    return gx;
}

Tensor hard_one_hot(const Tensor& logits, std::size_t categories) {
    check_rows(logits, categories);
    Tensor out(logits.shape());
    for (std::size_t r = 0; r < logits.size() / categories; ++r) {
        const float* xr = logits.ptr() + r * categories;
        const auto best = static_cast<std::size_t>(std::max_element(xr, xr + categories) - xr);
        out[r * categories + best] = 1.0f;
    }
    return out;
}

LossValue bce_loss(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape()) throw ShapeError(-1, target.shape(), pred.shape(), "bce_loss");
    LossValue out{0.0, Tensor(pred.shape())};
    const auto n = static_cast<double>(pred.size());
    if (pred.size() == 0) return out;
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = std::clamp(pred[i], kProbFloor, 1.0f - kProbFloor);
        const double t = target[i];
        total -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
        out.grad[i] = static_cast<float>((p - t) / (p * (1.0 - p)) / n);
    }
    out.value = total / n;
    return out;
}

double gs_variational_loss(const Tensor& q, std::size_t categories) {
    check_rows(q, categories);
    const double log_m = std::log(static_cast<double>(categories));
    double total = 0.0;
    for (float v : q.data())
        if (v > 0.0f) total += v * (std::log(static_cast<double>(v)) + log_m);
    return total;
}

LossValue gs_variational_loss_logits(const Tensor& logits, std::size_t categories) {
    const Tensor q = softmax_rows(logits, categories);
    LossValue out{0.0, Tensor(logits.shape())};
    const double log_m = std::log(static_cast<double>(categories));
    for (std::size_t r = 0; r < q.size() / categories; ++r) {
        const float* qr = q.ptr() + r * categories;
        // log q from the logits directly, so tiny probabilities do not underflow to log 0
        const float* xr = logits.ptr() + r * categories;
        const float mx = *std::max_element(xr, xr + categories);
        double lse = 0.0;
        for (std::size_t j = 0; j < categories; ++j) lse += std::exp(static_cast<double>(xr[j]) - mx);
        lse = std::log(lse) + mx;
        double neg_entropy = 0.0;
        for (std::size_t j = 0; j < categories; ++j) neg_entropy += qr[j] * (xr[j] - lse);
        out.value += neg_entropy + log_m;
        for (std::size_t j = 0; j < categories; ++j)
            out.grad[r * categories + j] = static_cast<float>(qr[j] * ((xr[j] - lse) - neg_entropy));
    }
    return out;
}

}  // namespace latplan::nd
