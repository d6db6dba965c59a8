#pragma once

// Central finite-difference oracle for Network::backward. Independent of the backward
// code path: it only calls forward_train and sums the output in double precision.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "latplan/nd/network.hpp"
#include "latplan/nd/ops.hpp"

namespace latplan::testing {

struct GradReport {
    double worst = 0.0;
    std::string where;
};

/// Relative error ||analytic - numeric|| / (||numeric|| + 1e-8), taken per gradient block.
inline double rel_error(const std::vector<double>& a, const std::vector<double>& n) {
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - n[i]) * (a[i] - n[i]);
        norm += n[i] * n[i];
    }
    return std::sqrt(diff) / (std::sqrt(norm) + 1e-8);
}

/// Actual float distance between orig+h and orig-h.
inline double fd_step(float orig, double h) {
    return static_cast<double>(orig + static_cast<float>(h)) - static_cast<double>(orig - static_cast<float>(h));
}

/// Loss = sum_k w_k * y_k for fixed random weights w. Noise, dropout masks and Gumbel
/// draws are frozen by replaying the same RngStream on every evaluation.
inline GradReport check_network_gradients(nd::Network& net, const nd::Tensor& x, const nd::Tensor* aux,
                                          const nd::RngStream& noise, const nd::Tensor& weights, double h = 1e-2) {
    auto loss = [&](const nd::Tensor& in, const nd::Tensor* a) {
        nd::RngStream r = noise;
        nd::Tape t = net.forward_train(in, r, a);
        double s = 0.0;
        for (std::size_t k = 0; k < t.output().size(); ++k) s += static_cast<double>(t.output()[k]) * weights[k];
        return s;
    };

    net.zero_grad();
    nd::RngStream r = noise;
    nd::Tape tape = net.forward_train(x, r, aux);
    nd::Tensor gx = net.backward(tape, weights);

    GradReport report;
    auto record = [&](const std::vector<double>& a, const std::vector<double>& n, const std::string& what) {
        const double e = rel_error(a, n);
        if (e > report.worst) {
            report.worst = e;
            report.where = what;
        }
    };

    {
        std::vector<double> a, n;
        nd::Tensor xp = x;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const float orig = xp[i];
            xp[i] = orig + static_cast<float>(h);
            const double up = loss(xp, aux);
            xp[i] = orig - static_cast<float>(h);
            const double down = loss(xp, aux);
            xp[i] = orig;
            n.push_back((up - down) / fd_step(orig, h));
            a.push_back(gx[i]);
        }
        record(a, n, "input");
    }
    if (aux) {
        std::vector<double> a, n;
        nd::Tensor ap = *aux;
        for (std::size_t i = 0; i < ap.size(); ++i) {
            const float orig = ap[i];
            ap[i] = orig + static_cast<float>(h);
            const double up = loss(x, &ap);
            ap[i] = orig - static_cast<float>(h);
            const double down = loss(x, &ap);
            ap[i] = orig;
            n.push_back((up - down) / fd_step(orig, h));
            a.push_back(tape.aux_grad()[i]);
        }
        record(a, n, "aux");
    }
    const auto params = net.parameters();
    for (std::size_t p = 0; p < params.size(); ++p) {
        nd::Tensor& w = *params[p];
        std::vector<double> a(w.grad().begin(), w.grad().end()), n;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const float orig = w[i];
            w[i] = orig + static_cast<float>(h);
            const double up = loss(x, aux);
            w[i] = orig - static_cast<float>(h);
            const double down = loss(x, aux);
            w[i] = orig;
            n.push_back((up - down) / fd_step(orig, h));
        }
        record(a, n, "param " + std::to_string(p));
    }
    return report;
}

/// Finite-difference check of a scalar function's gradient. `f` maps a tensor to its
/// value; `analytic` is the claimed gradient at `x`.
template <class F>
double check_scalar_gradient(F&& f, const nd::Tensor& x, const nd::Tensor& analytic, double h = 1e-3) {
    std::vector<double> a, n;
    nd::Tensor xp = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const float orig = xp[i];
        xp[i] = orig + static_cast<float>(h);
        const double up = f(xp);
        xp[i] = orig - static_cast<float>(h);
        const double down = f(xp);
        xp[i] = orig;
        n.push_back((up - down) / fd_step(orig, h));
        a.push_back(analytic[i]);
    }
    return rel_error(a, n);
}

/// Small networks that exercise one layer kind each, in the order the gradient suite
/// reports them. Inputs are drawn away from relu kinks.
struct LayerCase {
    std::string name;
    std::vector<nd::LayerSpec> layers;
    nd::Shape sample;
    std::size_t aux_width = 0;
};

inline std::vector<LayerCase> layer_cases() {
    using L = nd::LayerSpec;
    return {
        {"dense", {L::dense(5)}, {7}, 0},
        {"conv2d", {L::conv2d(3, 3, 3)}, {2, 5, 6}, 0},
        {"conv2d_1ch", {L::conv2d(3, 3, 2)}, {5, 5}, 0},
        {"batchnorm_flat", {L::batchnorm()}, {6}, 0},
        {"batchnorm_conv", {L::batchnorm()}, {3, 4, 4}, 0},
        {"dropout", {L::dropout(0.4f)}, {9}, 0},
        {"gaussian_noise", {L::gaussian_noise(0.4f)}, {9}, 0},
        {"relu", {L::relu()}, {9}, 0},
        {"tanh", {L::tanh()}, {9}, 0},
        {"sigmoid", {L::sigmoid()}, {9}, 0},
        {"gumbel_softmax", {L::gumbel_softmax(4, 3, 0.7f)}, {4, 3}, 0},
        {"reshape", {L::reshape({3, 4}), L::dense(2)}, {12}, 0},
        {"concat", {L::concat(), L::dense(4)}, {5}, 3},
    };
}

inline nd::Tensor random_tensor(const nd::Shape& shape, nd::RngStream& rng, double scale = 1.0, double min_abs = 0.0) {
    nd::Tensor t(shape);
    for (float& v : t.data()) {
        double u = (2.0 * rng.uniform() - 1.0) * scale;
        if (min_abs > 0.0 && std::abs(u) < min_abs) u = u < 0 ? u - min_abs : u + min_abs;
        v = static_cast<float>(u);
    }
    return t;
}

/// Worst relative error over every layer case for one seed.
inline GradReport check_layer_case(const LayerCase& c, std::uint64_t seed, std::size_t batch = 4) {
    nd::RngStream rng(seed);
    nd::Network net(c.layers);
    net.build(c.sample, rng, c.aux_width);
    // Non-trivial batchnorm affine parameters so their gradients are exercised.
    for (auto& l : net.layers())
        if (l.kind == nd::LayerKind::batchnorm) {
            for (float& v : l.params[0].data()) v = static_cast<float>(0.5 + rng.uniform());
            for (float& v : l.params[1].data()) v = static_cast<float>(rng.uniform() - 0.5);
        }
    nd::Shape xs{batch};
    xs.insert(xs.end(), c.sample.begin(), c.sample.end());
    const nd::Tensor x = random_tensor(xs, rng, 1.0, 0.05);
    nd::Tensor aux;
    if (c.aux_width) aux = random_tensor({batch, c.aux_width}, rng);
    const nd::RngStream noise = rng.fork(99);
    nd::RngStream probe = noise;
    const nd::Tensor out = net.forward_train(x, probe, c.aux_width ? &aux : nullptr).output();
    const nd::Tensor w = random_tensor(out.shape(), rng);
    // Batchnorm over a batch of 4 is strongly curved; 1e-2 leaves O(h^2) truncation near 1e-3.
    return check_network_gradients(net, x, c.aux_width ? &aux : nullptr, noise, w, 2.5e-3);
}

}  // namespace latplan::testing
