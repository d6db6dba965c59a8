#pragma once

#include <cstddef>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace latplan::nd {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// 64-byte aligned storage. Vectorized kernels peel differently depending on the
/// address, so unaligned buffers make float sums vary from run to run.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t alignment{64};

    AlignedAllocator() noexcept = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }

    template <class U>
    bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using FloatBuffer = std::vector<float, AlignedAllocator<float>>;

/// Raised when tensor extents disagree. `layer` is -1 outside a network.
class ShapeError : public std::runtime_error {
public:
    ShapeError(long layer, const Shape& expected, const Shape& actual, const std::string& what = {});

    long layer() const noexcept { return layer_; }
    const Shape& expected() const noexcept { return expected_; }
    const Shape& actual() const noexcept { return actual_; }

private:
    long layer_;
    Shape expected_;
    Shape actual_;
};

/// Dense row-major float32 array with an optional gradient buffer of the same shape.
/// Axis 0 is the batch axis everywhere in the network code.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, float fill = 0.0f);
    Tensor(Shape shape, std::vector<float> values);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }
    float* ptr() noexcept { return data_.data(); }
    const float* ptr() const noexcept { return data_.data(); }
    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }
    FloatBuffer& values() noexcept { return data_; }
    const FloatBuffer& values() const noexcept { return data_; }

    bool has_grad() const noexcept { return !grad_.empty(); }
    /// Allocates a zeroed gradient buffer if none exists.
    std::span<float> grad();
    std::span<const float> grad() const noexcept { return grad_; }
    void zero_grad();
    void drop_grad() { grad_.clear(); grad_.shrink_to_fit(); }

    /// Number of rows along axis 0 and elements per row.
    std::size_t batch() const noexcept { return shape_.empty() ? 0 : shape_[0]; }
    std::size_t row_size() const noexcept;

    void reshape(Shape shape);
    Tensor reshaped(Shape shape) const;
    Tensor rows(std::size_t begin, std::size_t end) const;
    Tensor gather_rows(std::span<const std::size_t> indices) const;
    void set_row(std::size_t row, std::span<const float> values);
    std::span<const float> row(std::size_t r) const;
    std::span<float> row(std::size_t r);

    /// Stacks same-shaped tensors along a new leading axis.
    static Tensor stack(std::span<const Tensor> items);

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    Shape shape_;
    FloatBuffer data_;
    FloatBuffer grad_;
};

}  // namespace latplan::nd
