#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace hofsurf {

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);
std::size_t element_count(const Shape& shape);

// Dense row-major array of doubles. Every extent is positive and the data
// length always equals the product of the extents. A scalar has shape {1}.
class Tensor {
public:
    Tensor() : shape_{1}, data_(1, 0.0) {}

    // Zero-filled tensor.
    explicit Tensor(Shape shape);

    // Takes ownership of `data`; rejects a length mismatch and any non-finite entry.
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double value);
    static Tensor full(Shape shape, double value);
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }

    // Rows/cols for rank-2 tensors; rank-1 is treated as a single row.
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

    // Value of a one-element tensor.
    double item() const;

    bool all_finite() const noexcept;

    // Same data, new shape with an equal element count.
    Tensor reshaped(Shape shape) const&;
    Tensor reshaped(Shape shape) &&;

    friend bool operator==(const Tensor& a, const Tensor& b) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

} // namespace hofsurf
