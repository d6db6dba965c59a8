#include "latplan/nd/adam.hpp"

#include <cmath>

namespace latplan::nd {

void adam_step(std::span<Tensor* const> params, AdamState& state, float lr) {
    if (state.m.empty()) {
        for (const Tensor* p : params) {
            state.m.emplace_back(p->shape());
            state.v.emplace_back(p->shape());
        }
    }
    if (state.m.size() != params.size()) throw ShapeError(-1, {state.m.size()}, {params.size()}, "adam parameter count");
    ++state.t;
    const double c1 = 1.0 - std::pow(static_cast<double>(state.beta1), static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(static_cast<double>(state.beta2), static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        if (m.shape() != p.shape()) throw ShapeError(-1, p.shape(), m.shape(), "adam moment");
        if (!p.has_grad()) continue;
        const auto g = p.grad();
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = state.beta1 * m[k] + (1.0f - state.beta1) * g[k];
            v[k] = state.beta2 * v[k] + (1.0f - state.beta2) * g[k] * g[k];
            const double mhat = m[k] / c1;
            const double vhat = v[k] / c2;
            p[k] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + state.eps));
        }
    }
}

}  // namespace latplan::nd
