#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "locmap/errors.hpp"

namespace locmap {

/// Pixel coordinate, (row, col), origin top-left.
struct Pixel {
    std::size_t row = 0;
    std::size_t col = 0;
    friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Dense row-major 2-D grid.
template <class T>
class Grid {
public:
    using value_type = T;

    Grid() = default;
    Grid(std::size_t rows, std::size_t cols, T fill = T{}) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Grid(std::size_t rows, std::size_t cols, std::vector<T> values)
        : rows_(rows), cols_(cols), data_(std::move(values)) {
        if (data_.size() != rows_ * cols_)
            throw InvalidInput("grid of " + std::to_string(rows_) + "x" + std::to_string(cols_) + " given " +
                               std::to_string(data_.size()) + " values");
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    bool same_shape(const auto& other) const noexcept { return rows_ == other.rows() && cols_ == other.cols(); }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using RealGrid = Grid<double>;

template <class A, class B>
void require_same_shape(const A& a, const B& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError(a.rows(), a.cols(), b.rows(), b.cols());
}

}  // namespace locmap
