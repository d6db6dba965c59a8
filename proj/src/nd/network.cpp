#include "latplan/nd/network.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "latplan/nd/ops.hpp"

namespace latplan::nd {

namespace {

using MatR = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<MatR>;
using CMapR = Eigen::Map<const MatR>;

MapR mat(Tensor& t, std::size_t rows, std::size_t cols) {
    return MapR(t.ptr(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
CMapR mat(const Tensor& t, std::size_t rows, std::size_t cols) {
    return CMapR(t.ptr(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
MapR mat(float* p, std::size_t rows, std::size_t cols) {
    return MapR(p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

Shape with_batch(std::size_t batch, const Shape& sample) {
    Shape s{batch};
    s.insert(s.end(), sample.begin(), sample.end());
    return s;
}

struct ConvGeom {
    std::size_t c, h, w, o, kh, kw, pt, pl;
    std::size_t patch() const { return c * kh * kw; }
    std::size_t pixels() const { return h * w; }
};

ConvGeom conv_geom(const LayerSpec& l, const Shape& in) {
    ConvGeom g{};
    if (in.size() == 2) {
        g.c = 1;
        g.h = in[0];
        g.w = in[1];
    } else {
        g.c = in[0];
        g.h = in[1];
        g.w = in[2];
    }
    g.o = l.channels;
    g.kh = l.kernel_h;
    g.kw = l.kernel_w;
    g.pt = (l.kernel_h - 1) / 2;
    g.pl = (l.kernel_w - 1) / 2;
    return g;
}

// col[(ci*kh + i)*kw + j][y*w + x] = img[ci][y + i - pt][x + j - pl]
void im2col(const float* img, const ConvGeom& g, float* col) {
    for (std::size_t ci = 0; ci < g.c; ++ci)
        for (std::size_t i = 0; i < g.kh; ++i)
            for (std::size_t j = 0; j < g.kw; ++j) {
                float* dst = col + ((ci * g.kh + i) * g.kw + j) * g.pixels();
                const float* src = img + ci * g.pixels();
                for (std::size_t y = 0; y < g.h; ++y) {
                    const long sy = static_cast<long>(y + i) - static_cast<long>(g.pt);
                    float* row = dst + y * g.w;
                    if (sy < 0 || sy >= static_cast<long>(g.h)) {
                        std::fill(row, row + g.w, 0.0f);
                        continue;
                    }
                    for (std::size_t x = 0; x < g.w; ++x) {
                        const long sx = static_cast<long>(x + j) - static_cast<long>(g.pl);
                        row[x] = (sx < 0 || sx >= static_cast<long>(g.w)) ? 0.0f
                                                                         : src[static_cast<std::size_t>(sy) * g.w + static_cast<std::size_t>(sx)];
                    }
                }
            }
}

void col2im(const float* col, const ConvGeom& g, float* img) {
    for (std::size_t ci = 0; ci < g.c; ++ci)
        for (std::size_t i = 0; i < g.kh; ++i)
            for (std::size_t j = 0; j < g.kw; ++j) {
                const float* src = col + ((ci * g.kh + i) * g.kw + j) * g.pixels();
                float* dst = img + ci * g.pixels();
                for (std::size_t y = 0; y < g.h; ++y) {
                    const long sy = static_cast<long>(y + i) - static_cast<long>(g.pt);
                    if (sy < 0 || sy >= static_cast<long>(g.h)) continue;
                    for (std::size_t x = 0; x < g.w; ++x) {
                        const long sx = static_cast<long>(x + j) - static_cast<long>(g.pl);
                        if (sx < 0 || sx >= static_cast<long>(g.w)) continue;
                        dst[static_cast<std::size_t>(sy) * g.w + static_cast<std::size_t>(sx)] += src[y * g.w + x];
                    }
                }
            }
}

// Batchnorm statistics are per feature for flat input and per channel for (C,H,W).
struct BnGeom {
    std::size_t features;
    std::size_t spatial;
};

BnGeom bn_geom(const Shape& in) {
    if (in.size() == 3) return {in[0], in[1] * in[2]};
    return {numel(in), 1};
}

float glorot_limit(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
}

void fill_uniform(Tensor& t, float limit, RngStream& rng) {
    for (float& v : t.data()) v = static_cast<float>((2.0 * rng.uniform() - 1.0) * limit);
}

}  // namespace

const char* to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::dense: return "dense";
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::batchnorm: return "batchnorm";
        case LayerKind::dropout: return "dropout";
        case LayerKind::gaussian_noise: return "gaussian_noise";
        case LayerKind::activation: return "activation";
        case LayerKind::gumbel_softmax: return "gumbel_softmax";
        case LayerKind::reshape: return "reshape";
        case LayerKind::concat: return "concat";
    }
    return "unknown";
}

LayerSpec LayerSpec::dense(std::size_t out) {
    LayerSpec l;
    l.kind = LayerKind::dense;
    l.units = out;
    return l;
}

LayerSpec LayerSpec::conv2d(std::size_t kh, std::size_t kw, std::size_t channels) {
    LayerSpec l;
    l.kind = LayerKind::conv2d;
    l.kernel_h = kh;
    l.kernel_w = kw;
    l.channels = channels;
    return l;
}

LayerSpec LayerSpec::batchnorm() {
    LayerSpec l;
    l.kind = LayerKind::batchnorm;
    return l;
}

LayerSpec LayerSpec::dropout(float rate) {
    if (!(rate >= 0.0f && rate < 1.0f)) throw std::invalid_argument("dropout rate must be in [0,1)");
    LayerSpec l;
    l.kind = LayerKind::dropout;
    l.rate = rate;
    return l;
}

LayerSpec LayerSpec::gaussian_noise(float sigma) {
    LayerSpec l;
    l.kind = LayerKind::gaussian_noise;
    l.sigma = sigma;
    return l;
}

LayerSpec LayerSpec::act(Activation a) {
    LayerSpec l;
    l.kind = LayerKind::activation;
    l.activation = a;
    return l;
}

LayerSpec LayerSpec::gumbel_softmax(std::size_t n, std::size_t m, float tau) {
    if (!(tau > 0.0f)) throw std::invalid_argument("gumbel_softmax temperature must be positive");
    LayerSpec l;
    l.kind = LayerKind::gumbel_softmax;
    l.rows = n;
    l.categories = m;
    l.temperature = tau;
    return l;
}

LayerSpec LayerSpec::reshape(Shape dims) {
    LayerSpec l;
    l.kind = LayerKind::reshape;
    l.dims = std::move(dims);
    return l;
}

LayerSpec LayerSpec::concat() {
    LayerSpec l;
    l.kind = LayerKind::concat;
    return l;
}

void Network::build(const Shape& sample_shape, RngStream& rng, std::size_t aux_width) {
    trace_shapes(sample_shape, aux_width, &rng);
}

void Network::resolve(const Shape& sample_shape, std::size_t aux_width) {
    trace_shapes(sample_shape, aux_width, nullptr);
}

void Network::trace_shapes(const Shape& sample_shape, std::size_t aux_width, RngStream* init_rng) {
    in_shapes_.clear();
    aux_width_ = aux_width;
    Shape cur = sample_shape;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        LayerSpec& l = layers_[i];
        const long idx = static_cast<long>(i);
        in_shapes_.push_back(cur);
        switch (l.kind) {
            case LayerKind::dense: {
                const std::size_t in = numel(cur);
                if (init_rng) {
                    l.params = {Tensor({in, l.units}), Tensor({l.units})};
                    fill_uniform(l.params[0], glorot_limit(in, l.units), *init_rng);
                } else if (l.params.size() != 2 || l.params[0].shape() != Shape{in, l.units}) {
                    throw ShapeError(idx, {in, l.units}, l.params.empty() ? Shape{} : l.params[0].shape(), "dense weight");
                }
                cur = {l.units};
                break;
            }
            case LayerKind::conv2d: {
                if (cur.size() != 2 && cur.size() != 3) throw ShapeError(idx, {0, 0, 0}, cur, "conv2d expects (H,W) or (C,H,W)");
                const ConvGeom g = conv_geom(l, cur);
                const Shape wshape{g.o, g.c, g.kh, g.kw};
                if (init_rng) {
                    l.params = {Tensor(wshape), Tensor({g.o})};
                    fill_uniform(l.params[0], glorot_limit(g.c * g.kh * g.kw, g.o * g.kh * g.kw), *init_rng);
                } else if (l.params.size() != 2 || l.params[0].shape() != wshape) {
                    throw ShapeError(idx, wshape, l.params.empty() ? Shape{} : l.params[0].shape(), "conv2d kernel");
                }
                cur = {g.o, g.h, g.w};
                break;
            }
            case LayerKind::batchnorm: {
                const std::size_t f = bn_geom(cur).features;
                if (init_rng) {
                    l.params = {Tensor({f}, 1.0f), Tensor({f})};
                    l.buffers = {Tensor({f}), Tensor({f}, 1.0f)};
                } else if (l.params.size() != 2 || l.buffers.size() != 2 || l.params[0].shape() != Shape{f}) {
                    throw ShapeError(idx, {f}, l.params.empty() ? Shape{} : l.params[0].shape(), "batchnorm scale");
                }
                break;
            }
            case LayerKind::dropout:
                if (!(l.rate >= 0.0f && l.rate < 1.0f)) throw std::invalid_argument("dropout rate must be in [0,1)");
                break;
            case LayerKind::gaussian_noise:
            case LayerKind::activation:
                break;
            case LayerKind::gumbel_softmax:
                if (numel(cur) != l.rows * l.categories)
                    throw ShapeError(idx, {l.rows, l.categories}, cur, "gumbel_softmax width");
                break;
            case LayerKind::reshape:
                if (numel(l.dims) != numel(cur)) throw ShapeError(idx, l.dims, cur, "reshape");
                cur = l.dims;
                break;
            case LayerKind::concat:
                if (aux_width == 0) throw std::invalid_argument("concat layer needs an auxiliary input width");
                cur = {numel(cur) + aux_width};
                break;
        }
    }
    in_shapes_.push_back(cur);
}

const Shape& Network::input_shape() const {
    if (in_shapes_.empty()) throw std::logic_error("network not built");
    return in_shapes_.front();
}

const Shape& Network::output_shape() const {
    if (in_shapes_.empty()) throw std::logic_error("network not built");
    return in_shapes_.back();
}

void Network::check_input(const Tensor& x, const Tensor* aux) const {
    if (!built()) throw std::logic_error("network not built");
    const Shape want = with_batch(x.batch(), in_shapes_.front());
    if (x.rank() == 0 || x.shape() != want) throw ShapeError(0, want, x.shape(), "network input");
    if (aux_width_ > 0) {
        if (!aux) throw std::invalid_argument("network has concat layers but no auxiliary input was given");
        const Shape aw{x.batch(), aux_width_};
        if (aux->batch() != x.batch() || aux->size() != x.batch() * aux_width_)
            throw ShapeError(-1, aw, aux->shape(), "auxiliary input");
    }
}

namespace {

Tensor dense_forward(const LayerSpec& l, const Tensor& x) {
    const std::size_t b = x.batch(), in = x.row_size(), out = l.units;
    Tensor y({b, out});
    auto Y = mat(y, b, out);
    Y.noalias() = mat(x, b, in) * mat(l.params[0], in, out);
    Y.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(l.params[1].ptr(), static_cast<Eigen::Index>(out));
    return y;
}

Tensor conv_forward(const LayerSpec& l, const Shape& in_shape, const Tensor& x) {
    const ConvGeom g = conv_geom(l, in_shape);
    const std::size_t b = x.batch();
    Tensor y({b, g.o, g.h, g.w});
    FloatBuffer col(g.patch() * g.pixels());
    const auto K = mat(l.params[0], g.o, g.patch());
    for (std::size_t n = 0; n < b; ++n) {
        im2col(x.ptr() + n * g.c * g.pixels(), g, col.data());
        auto Y = mat(y.ptr() + n * g.o * g.pixels(), g.o, g.pixels());
        Y.noalias() = K * mat(col.data(), g.patch(), g.pixels());
        for (std::size_t o = 0; o < g.o; ++o) Y.row(static_cast<Eigen::Index>(o)).array() += l.params[1][o];
    }
    return y;
}

Tensor bn_infer(const LayerSpec& l, const Shape& in_shape, const Tensor& x) {
    const BnGeom g = bn_geom(in_shape);
    Tensor y(x.shape());
    for (std::size_t n = 0; n < x.batch(); ++n)
        for (std::size_t f = 0; f < g.features; ++f) {
            const float scale = l.params[0][f] / std::sqrt(l.buffers[1][f] + l.epsilon);
            const float shift = l.params[1][f] - l.buffers[0][f] * scale;
            const std::size_t base = (n * g.features + f) * g.spatial;
            for (std::size_t s = 0; s < g.spatial; ++s) y[base + s] = x[base + s] * scale + shift;
        }
    return y;
}

float activate(Activation a, float v) {
    switch (a) {
        case Activation::relu: return v > 0.0f ? v : 0.0f;
        case Activation::tanh: return std::tanh(v);
        case Activation::sigmoid: return 1.0f / (1.0f + std::exp(-v));
    }
    return v;
}

Tensor concat_forward(const Tensor& x, const Tensor& aux) {
    const std::size_t b = x.batch(), f = x.row_size(), a = aux.row_size();
    Tensor y({b, f + a});
    for (std::size_t n = 0; n < b; ++n) {
        std::copy_n(x.ptr() + n * f, f, y.ptr() + n * (f + a));
        std::copy_n(aux.ptr() + n * a, a, y.ptr() + n * (f + a) + f);
    }
    return y;
}

}  // namespace

Tensor Network::infer(const Tensor& x, const Tensor* aux) const {
    check_input(x, aux);
    Tensor cur = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& l = layers_[i];
        switch (l.kind) {
            case LayerKind::dense: cur = dense_forward(l, cur); break;
            case LayerKind::conv2d: cur = conv_forward(l, in_shapes_[i], cur); break;
            case LayerKind::batchnorm: cur = bn_infer(l, in_shapes_[i], cur); break;
            case LayerKind::dropout:
            case LayerKind::gaussian_noise: break;
            case LayerKind::activation:
                for (float& v : cur.data()) v = activate(l.activation, v);
                break;
            case LayerKind::gumbel_softmax: cur = hard_one_hot(cur, l.categories); break;
            case LayerKind::reshape: cur.reshape(with_batch(cur.batch(), l.dims)); break;
            case LayerKind::concat: cur = concat_forward(cur, *aux); break;
        }
    }
    return cur;
}

Tape Network::forward(const Tensor& x, Mode mode, RngStream& rng, const Tensor* aux) {
    if (mode == Mode::train) return forward_train(x, rng, aux);
    Tape tape;
    tape.output_ = infer(x, aux);
    return tape;
}

Tape Network::forward_train(const Tensor& x, RngStream& rng, const Tensor* aux) {
    check_input(x, aux);
    Tape tape;
    tape.trainable_ = true;
    if (aux) tape.aux_ = *aux;
    tape.caches_.resize(layers_.size());
    Tensor cur = x;
    cur.drop_grad();
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        LayerSpec& l = layers_[i];
        LayerCache& c = tape.caches_[i];
        const std::size_t b = cur.batch();
        switch (l.kind) {
            case LayerKind::dense:
                c.input = std::move(cur);
                cur = dense_forward(l, c.input);
                break;
            case LayerKind::conv2d:
                c.input = std::move(cur);
                cur = conv_forward(l, in_shapes_[i], c.input);
                break;
            case LayerKind::batchnorm: {
                const BnGeom g = bn_geom(in_shapes_[i]);
                const double count = static_cast<double>(b * g.spatial);
                Tensor xhat(cur.shape());
                Tensor inv_std({g.features});
                for (std::size_t f = 0; f < g.features; ++f) {
                    double sum = 0.0, sq = 0.0;
                    for (std::size_t n = 0; n < b; ++n) {
                        const float* p = cur.ptr() + (n * g.features + f) * g.spatial;
                        for (std::size_t s = 0; s < g.spatial; ++s) sum += p[s];
                    }
                    const double mean = sum / count;
                    for (std::size_t n = 0; n < b; ++n) {
                        const float* p = cur.ptr() + (n * g.features + f) * g.spatial;
                        for (std::size_t s = 0; s < g.spatial; ++s) sq += (p[s] - mean) * (p[s] - mean);
                    }
                    const double var = sq / count;
                    const double istd = 1.0 / std::sqrt(var + l.epsilon);
                    inv_std[f] = static_cast<float>(istd);
                    for (std::size_t n = 0; n < b; ++n) {
                        const std::size_t base = (n * g.features + f) * g.spatial;
                        for (std::size_t s = 0; s < g.spatial; ++s)
                            xhat[base + s] = static_cast<float>((cur[base + s] - mean) * istd);
                    }
                    const double unbiased = count > 1.0 ? var * count / (count - 1.0) : var;
                    l.buffers[0][f] = static_cast<float>(l.momentum * l.buffers[0][f] + (1.0 - l.momentum) * mean);
                    l.buffers[1][f] = static_cast<float>(l.momentum * l.buffers[1][f] + (1.0 - l.momentum) * unbiased);
                }
                for (std::size_t n = 0; n < b; ++n)
                    for (std::size_t f = 0; f < g.features; ++f) {
                        const std::size_t base = (n * g.features + f) * g.spatial;
                        for (std::size_t s = 0; s < g.spatial; ++s)
                            cur[base + s] = xhat[base + s] * l.params[0][f] + l.params[1][f];
                    }
                c.saved = std::move(xhat);
                c.saved2 = std::move(inv_std);
                break;
            }
            case LayerKind::dropout: {
                Tensor mask(cur.shape());
                const float keep = 1.0f / (1.0f - l.rate);
                for (std::size_t k = 0; k < cur.size(); ++k) {
                    mask[k] = rng.uniform() >= l.rate ? keep : 0.0f;
                    cur[k] *= mask[k];
                }
                c.saved = std::move(mask);
                break;
            }
            case LayerKind::gaussian_noise:
                for (float& v : cur.data()) v += static_cast<float>(l.sigma * rng.normal());
                break;
            case LayerKind::activation:
                for (float& v : cur.data()) v = activate(l.activation, v);
                c.saved = cur;
                break;
            case LayerKind::gumbel_softmax:
                cur = gumbel_softmax(cur, l.categories, l.temperature, rng);
                c.saved = cur;
                break;
            case LayerKind::reshape:
                c.input = Tensor(cur.shape());  // shape only, payload unused
                cur.reshape(with_batch(b, l.dims));
                break;
            case LayerKind::concat:
                c.input = Tensor(cur.shape());
                cur = concat_forward(cur, *aux);
                break;
        }
    }
    tape.output_ = std::move(cur);
    return tape;
}

Tensor Network::backward(Tape& tape, const Tensor& grad_output) {
    if (!tape.trainable_) throw TapeError("backward on a tape recorded in inference mode");
    if (tape.consumed_) throw TapeError("backward called twice on the same tape");
    if (grad_output.shape() != tape.output_.shape())
        throw ShapeError(static_cast<long>(layers_.size()), tape.output_.shape(), grad_output.shape(), "output gradient");
    tape.consumed_ = true;
    if (aux_width_ > 0) tape.aux_grad_ = Tensor(tape.aux_.shape());

    Tensor g = grad_output;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        LayerSpec& l = layers_[i];
        LayerCache& c = tape.caches_[i];
        const std::size_t b = g.batch();
        switch (l.kind) {
            case LayerKind::dense: {
                const std::size_t in = c.input.row_size(), out = l.units;
                auto G = mat(g, b, out);
                const auto X = mat(c.input, b, in);
                auto dW = mat(l.params[0].grad().data(), in, out);
                dW.noalias() += X.transpose() * G;
                auto db = l.params[1].grad();
                for (std::size_t n = 0; n < b; ++n)
                    for (std::size_t o = 0; o < out; ++o) db[o] += g[n * out + o];
                Tensor gx(c.input.shape());
                mat(gx, b, in).noalias() = G * mat(l.params[0], in, out).transpose();
                g = std::move(gx);
                break;
            }
            case LayerKind::conv2d: {
                const ConvGeom geo = conv_geom(l, in_shapes_[i]);
                FloatBuffer col(geo.patch() * geo.pixels());
                FloatBuffer gcol(col.size());
                auto dK = mat(l.params[0].grad().data(), geo.o, geo.patch());
                auto db = l.params[1].grad();
                const auto K = mat(l.params[0], geo.o, geo.patch());
                Tensor gx(c.input.shape());
                for (std::size_t n = 0; n < b; ++n) {
                    im2col(c.input.ptr() + n * geo.c * geo.pixels(), geo, col.data());
                    const auto G = mat(g.ptr() + n * geo.o * geo.pixels(), geo.o, geo.pixels());
                    dK.noalias() += G * mat(col.data(), geo.patch(), geo.pixels()).transpose();
                    for (std::size_t o = 0; o < geo.o; ++o) db[o] += G.row(static_cast<Eigen::Index>(o)).sum();
                    mat(gcol.data(), geo.patch(), geo.pixels()).noalias() = K.transpose() * G;
                    col2im(gcol.data(), geo, gx.ptr() + n * geo.c * geo.pixels());
                }
                g = std::move(gx);
                break;
            }
            case LayerKind::batchnorm: {
                const BnGeom geo = bn_geom(in_shapes_[i]);
                const double count = static_cast<double>(b * geo.spatial);
                auto dgamma = l.params[0].grad();
                auto dbeta = l.params[1].grad();
                Tensor gx(g.shape());
                for (std::size_t f = 0; f < geo.features; ++f) {
                    double sg = 0.0, sgx = 0.0;
                    for (std::size_t n = 0; n < b; ++n) {
                        const std::size_t base = (n * geo.features + f) * geo.spatial;
                        for (std::size_t s = 0; s < geo.spatial; ++s) {
                            sg += g[base + s];
                            sgx += static_cast<double>(g[base + s]) * c.saved[base + s];
                        }
                    }
                    dgamma[f] += static_cast<float>(sgx);
                    dbeta[f] += static_cast<float>(sg);
                    const double k = l.params[0][f] * c.saved2[f] / count;
                    for (std::size_t n = 0; n < b; ++n) {
                        const std::size_t base = (n * geo.features + f) * geo.spatial;
                        for (std::size_t s = 0; s < geo.spatial; ++s)
                            gx[base + s] = static_cast<float>(k * (count * g[base + s] - sg - c.saved[base + s] * sgx));
                    }
                }
                g = std::move(gx);
                break;
            }
            case LayerKind::dropout:
                for (std::size_t k = 0; k < g.size(); ++k) g[k] *= c.saved[k];
                break;
            case LayerKind::gaussian_noise:
                break;
            case LayerKind::activation:
                for (std::size_t k = 0; k < g.size(); ++k) {
                    const float y = c.saved[k];
                    switch (l.activation) {
                        case Activation::relu: g[k] = y > 0.0f ? g[k] : 0.0f; break;
                        case Activation::tanh: g[k] *= 1.0f - y * y; break;
                        case Activation::sigmoid: g[k] *= y * (1.0f - y); break;
                    }
                }
                break;
            case LayerKind::gumbel_softmax:
                g = gumbel_softmax_backward(c.saved, g, l.categories, l.temperature);
                break;
            case LayerKind::reshape:
                g.reshape(c.input.shape());
                break;
            case LayerKind::concat: {
                const std::size_t f = c.input.row_size(), a = aux_width_;
                Tensor gx(c.input.shape());
                for (std::size_t n = 0; n < b; ++n) {
                    std::copy_n(g.ptr() + n * (f + a), f, gx.ptr() + n * f);
                    for (std::size_t k = 0; k < a; ++k) tape.aux_grad_[n * a + k] += g[n * (f + a) + f + k];
                }
                g = std::move(gx);
                break;
            }
        }
        c = LayerCache{};
    }
    return g;
}

std::vector<Tensor*> Network::parameters() {
    std::vector<Tensor*> out;
    for (LayerSpec& l : layers_)
        for (Tensor& p : l.params) out.push_back(&p);
    return out;
}

void Network::zero_grad() {
    for (Tensor* p : parameters()) p->zero_grad();
}

void Network::set_temperature(float tau) {
    if (!(tau > 0.0f)) throw std::invalid_argument("temperature must be positive");
    for (LayerSpec& l : layers_)
        if (l.kind == LayerKind::gumbel_softmax) l.temperature = tau;
}

}  // namespace latplan::nd
