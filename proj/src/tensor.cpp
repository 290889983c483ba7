#include "streamtf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

STREAMTF_NS_BEGIN

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << " x ";
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, Scalar fill) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<Scalar> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_numel(shape_) != data_.size()) {
        throw ShapeError("tensor: shape " + shape_str(shape_) + " does not match " + std::to_string(data_.size()) +
                         " values");
    }
}

Tensor Tensor::from(Shape shape, std::initializer_list<Scalar> values) {
    return Tensor(std::move(shape), std::vector<Scalar>(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) throw ShapeError("tensor: axis out of range");
    return shape_[axis];
}

Scalar Tensor::item() const {
    if (data_.size() != 1) throw ShapeError("tensor: item() on " + shape_str(shape_));
    return data_[0];
}

void Tensor::fill(Scalar v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](Scalar v) { return std::isfinite(v); });
}

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_numel(shape) != data_.size()) {
        throw ShapeError("tensor: cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    }
    return Tensor(std::move(shape), data_);
}

void expect_shape(const Tensor& t, const Shape& shape, const char* what) {
    if (t.shape() != shape) {
        throw ShapeError(std::string(what) + ": expected " + shape_str(shape) + ", got " + shape_str(t.shape()));
    }
}

Scalar max_abs_diff(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError("max_abs_diff: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
    Scalar m = 0;
    for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

STREAMTF_NS_END
