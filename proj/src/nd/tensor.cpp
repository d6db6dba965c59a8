#include "latplan/nd/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

namespace latplan::nd {

std::size_t numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

namespace {
std::string shape_message(long layer, const Shape& expected, const Shape& actual, const std::string& what) {
    std::ostringstream os;
    if (layer >= 0) os << "layer " << layer << ": ";
    os << "shape mismatch";
    if (!what.empty()) os << " (" << what << ")";
    os << ", expected " << to_string(expected) << ", got " << to_string(actual);
    return os.str();
}
}  // namespace

ShapeError::ShapeError(long layer, const Shape& expected, const Shape& actual, const std::string& what)
    : std::runtime_error(shape_message(layer, expected, actual, what)),
      layer_(layer), expected_(expected), actual_(actual) {}

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)), data_(numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> values) : shape_(std::move(shape)), data_(values.begin(), values.end()) {
    if (numel(shape_) != data_.size())
        throw ShapeError(-1, shape_, {data_.size()}, "payload length");
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) throw std::out_of_range("tensor axis out of range");
    return shape_[axis];
}

std::span<float> Tensor::grad() {
    if (grad_.size() != data_.size()) grad_.assign(data_.size(), 0.0f);
    return grad_;
}

void Tensor::zero_grad() {
    grad_.assign(data_.size(), 0.0f);
}

std::size_t Tensor::row_size() const noexcept {
    if (shape_.empty() || shape_[0] == 0) return 0;
    return data_.size() / shape_[0];
}

void Tensor::reshape(Shape shape) {
    if (numel(shape) != data_.size()) throw ShapeError(-1, shape, shape_, "reshape");
    shape_ = std::move(shape);
}

Tensor Tensor::reshaped(Shape shape) const {
    Tensor out = *this;
    out.drop_grad();
    out.reshape(std::move(shape));
    return out;
}

Tensor Tensor::rows(std::size_t begin, std::size_t end) const {
    if (begin > end || end > batch()) throw std::out_of_range("row slice out of range");
    Shape s = shape_;
    s[0] = end - begin;
    const std::size_t w = row_size();
    Tensor out(std::move(s));
    std::copy(data_.begin() + static_cast<std::ptrdiff_t>(begin * w), data_.begin() + static_cast<std::ptrdiff_t>(end * w),
              out.data_.begin());
    return out;
}

Tensor Tensor::gather_rows(std::span<const std::size_t> indices) const {
    Shape s = shape_;
    s[0] = indices.size();
    Tensor out(std::move(s));
    const std::size_t w = row_size();
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= batch()) throw std::out_of_range("gather index out of range");
        std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(indices[i] * w), w,
                    out.data_.begin() + static_cast<std::ptrdiff_t>(i * w));
    }
    return out;
}

void Tensor::set_row(std::size_t r, std::span<const float> values) {
    const std::size_t w = row_size();
    if (values.size() != w) throw ShapeError(-1, {w}, {values.size()}, "row");
    std::copy(values.begin(), values.end(), data_.begin() + static_cast<std::ptrdiff_t>(r * w));
}

std::span<const float> Tensor::row(std::size_t r) const {
    const std::size_t w = row_size();
    return std::span<const float>(data_).subspan(r * w, w);
}

std::span<float> Tensor::row(std::size_t r) {
    const std::size_t w = row_size();
    return std::span<float>(data_).subspan(r * w, w);
}

Tensor Tensor::stack(std::span<const Tensor> items) {
    if (items.empty()) return Tensor(Shape{0});
    Shape s{items.size()};
    const Shape& inner = items.front().shape();
    s.insert(s.end(), inner.begin(), inner.end());
    Tensor out(std::move(s));
    const std::size_t w = items.front().size();
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].shape() != inner) throw ShapeError(-1, inner, items[i].shape(), "stack");
        std::copy(items[i].data_.begin(), items[i].data_.end(),
                  out.data_.begin() + static_cast<std::ptrdiff_t>(i * w));
    }
    return out;
}

}  // namespace latplan::nd
