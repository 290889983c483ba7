#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "streamtf/base.hpp"

STREAMTF_NS_BEGIN

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major array. Plain value type: copying copies the data.
class Tensor {
   public:
    Tensor() = default;
    explicit Tensor(Shape shape, Scalar fill = 0);
    Tensor(Shape shape, std::vector<Scalar> data);

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor from(Shape shape, std::initializer_list<Scalar> values);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    // Size of the last axis; 1 for scalars.
    std::size_t cols() const { return shape_.empty() ? 1 : shape_.back(); }
    // Product of all axes but the last.
    std::size_t rows() const { return cols() == 0 ? 0 : numel() / cols(); }

    Scalar* data() { return data_.data(); }
    const Scalar* data() const { return data_.data(); }
    std::span<Scalar> span() { return data_; }
    std::span<const Scalar> span() const { return data_; }
    std::vector<Scalar>& values() { return data_; }
    const std::vector<Scalar>& values() const { return data_; }

    Scalar& operator[](std::size_t i) { return data_[i]; }
    Scalar operator[](std::size_t i) const { return data_[i]; }

    Scalar& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    Scalar at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    std::span<Scalar> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
    std::span<const Scalar> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

    Scalar item() const;
    void fill(Scalar v);
    bool all_finite() const;

    Tensor reshaped(Shape shape) const;

   private:
    Shape shape_;
    std::vector<Scalar> data_;
};

// Raises ShapeError naming `what` unless shapes match exactly.
void expect_shape(const Tensor& t, const Shape& shape, const char* what);

Scalar max_abs_diff(const Tensor& a, const Tensor& b);

STREAMTF_NS_END
