#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "latplan/nd/rng.hpp"
#include "latplan/nd/tensor.hpp"

namespace latplan::nd {

enum class LayerKind : std::uint32_t {
    dense = 1,
    conv2d = 2,
    batchnorm = 3,
    dropout = 4,
    gaussian_noise = 5,
    activation = 6,
    gumbel_softmax = 7,
    reshape = 8,
    concat = 9,
};

enum class Activation : std::uint32_t { relu = 0, tanh = 1, sigmoid = 2 };

enum class Mode { train, infer };

const char* to_string(LayerKind kind);

/// One layer of a sequential network: its kind, hyperparameters and parameter tensors.
///
/// Tensors are batch-major. Conv layers take per-sample shapes (H,W) or (C,H,W), use
/// stride 1 and zero "same" padding. `gumbel_softmax` treats its input as N rows of M
/// unnormalized log-probabilities; `concat` appends the auxiliary input passed to
/// forward() to the flattened activation.
struct LayerSpec {
    LayerKind kind = LayerKind::dense;

    std::size_t units = 0;
    std::size_t kernel_h = 0;
    std::size_t kernel_w = 0;
    std::size_t channels = 0;
    float rate = 0.0f;
    float sigma = 0.0f;
    Activation activation = Activation::relu;
    std::size_t rows = 0;        // gumbel_softmax N
    std::size_t categories = 0;  // gumbel_softmax M
    float temperature = 1.0f;
    Shape dims;
    float momentum = 0.9f;
    float epsilon = 1e-5f;

    std::vector<Tensor> params;   // dense/conv: weight, bias; batchnorm: gamma, beta
    std::vector<Tensor> buffers;  // batchnorm: running mean, running variance

    static LayerSpec dense(std::size_t out);
    static LayerSpec conv2d(std::size_t kh, std::size_t kw, std::size_t channels);
    static LayerSpec batchnorm();
    static LayerSpec dropout(float rate);
    static LayerSpec gaussian_noise(float sigma);
    static LayerSpec relu() { return act(Activation::relu); }
    static LayerSpec tanh() { return act(Activation::tanh); }
    static LayerSpec sigmoid() { return act(Activation::sigmoid); }
    static LayerSpec act(Activation a);
    static LayerSpec gumbel_softmax(std::size_t n, std::size_t m, float tau = 1.0f);
    static LayerSpec reshape(Shape dims);
    static LayerSpec concat();
};

/// Per-layer record kept by a training-mode forward pass.
struct LayerCache {
    Tensor input;
    Tensor saved;
    Tensor saved2;
};

/// Record of one forward pass. Backward may be run on it exactly once.
class Tape {
public:
    const Tensor& output() const noexcept { return output_; }
    /// Gradient w.r.t. the auxiliary (concat) input, filled by backward().
    const Tensor& aux_grad() const noexcept { return aux_grad_; }
    bool trainable() const noexcept { return trainable_; }
    bool consumed() const noexcept { return consumed_; }

private:
    friend class Network;
    std::vector<LayerCache> caches_;
    Tensor output_;
    Tensor aux_;
    Tensor aux_grad_;
    bool trainable_ = false;
    bool consumed_ = false;
};

class TapeError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class Network {
public:
    Network() = default;
    explicit Network(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {}

    /// Resolves every layer's input shape and initializes parameters (Glorot uniform
    /// weights, zero biases, unit batchnorm scale). `aux_width` is the per-sample
    /// width fed to concat layers.
    void build(const Shape& sample_shape, RngStream& rng, std::size_t aux_width = 0);
    /// Re-resolves shapes for a network whose parameters were loaded from disk.
    void resolve(const Shape& sample_shape, std::size_t aux_width = 0);

    bool built() const noexcept { return !in_shapes_.empty(); }
    const Shape& input_shape() const;
    const Shape& output_shape() const;
    std::size_t aux_width() const noexcept { return aux_width_; }

    /// Inference: dropout and noise off, batchnorm running statistics, gumbel_softmax
    /// hardened to the one-hot argmax. Thread-safe.
    Tensor infer(const Tensor& x, const Tensor* aux = nullptr) const;

    /// Training-mode pass. Updates batchnorm running statistics.
    Tape forward_train(const Tensor& x, RngStream& rng, const Tensor* aux = nullptr);

    Tape forward(const Tensor& x, Mode mode, RngStream& rng, const Tensor* aux = nullptr);

    /// Accumulates parameter gradients and returns d(loss)/d(input).
    Tensor backward(Tape& tape, const Tensor& grad_output);

    std::vector<Tensor*> parameters();
    void zero_grad();

    std::vector<LayerSpec>& layers() noexcept { return layers_; }
    const std::vector<LayerSpec>& layers() const noexcept { return layers_; }

    /// Sets the temperature on every gumbel_softmax layer.
    void set_temperature(float tau);

private:
    void check_input(const Tensor& x, const Tensor* aux) const;
    void trace_shapes(const Shape& sample_shape, std::size_t aux_width, RngStream* init_rng);

    std::vector<LayerSpec> layers_;
    std::vector<Shape> in_shapes_;  // per-sample input shape of each layer, plus final output
    std::size_t aux_width_ = 0;
};

}  // namespace latplan::nd
