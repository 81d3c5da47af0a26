#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "glass3d/errors.hpp"

namespace glass3d {

/// Integer pixel location. `row` indexes y, `col` indexes x.
struct Pixel {
    int row = 0;
    int col = 0;

    friend bool operator==(const Pixel&, const Pixel&) = default;
    friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// Dense row-major 2D grid.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int rows, int cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(checked_size(rows, cols), fill) {}

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int row, int col) { return data_[index(row, col)]; }
    const T& operator()(int row, int col) const { return data_[index(row, col)]; }
    T& operator[](Pixel p) { return (*this)(p.row, p.col); }
    const T& operator[](Pixel p) const { return (*this)(p.row, p.col); }

    bool contains(int row, int col) const noexcept {
        return row >= 0 && row < rows_ && col >= 0 && col < cols_;
    }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    bool same_shape(int rows, int cols) const noexcept { return rows_ == rows && cols_ == cols; }
    template <typename U>
    bool same_shape(const Grid<U>& other) const noexcept {
        return same_shape(other.rows(), other.cols());
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    static std::size_t checked_size(int rows, int cols) {
        if (rows < 0 || cols < 0) throw ShapeError("grid dimensions must be non-negative");
        return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    }
    std::size_t index(int row, int col) const noexcept {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols_) +
               static_cast<std::size_t>(col);
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

/// Metric depth in meters; 0 marks "no glass".
using DepthMap = Grid<double>;
/// Per-pixel centerness in [0, 1]; 0 outside every instance.
using CenternessMap = Grid<double>;
/// Per-pixel instance label: 0 = background, 1..N = glass instances.
using InstanceMaskSet = Grid<std::uint8_t>;
/// Binary mask (nonzero = inside).
using BinaryMask = Grid<std::uint8_t>;

/// Multi-channel map, channel-major (C x H x W).
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(int channels, int rows, int cols, double fill = 0.0)
        : channels_(channels), rows_(rows), cols_(cols) {
        if (channels < 0 || rows < 0 || cols < 0)
            throw ShapeError("feature map dimensions must be non-negative");
        data_.assign(static_cast<std::size_t>(channels) * rows * cols, fill);
    }

    int channels() const noexcept { return channels_; }
    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }

    double& operator()(int c, int row, int col) { return data_[index(c, row, col)]; }
    double operator()(int c, int row, int col) const { return data_[index(c, row, col)]; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

private:
    std::size_t index(int c, int row, int col) const noexcept {
        return (static_cast<std::size_t>(c) * rows_ + row) * cols_ + col;
    }

    int channels_ = 0;
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

/// Per-pixel plane parameters; channels are (theta1, theta2, d).
using PlaneParamMap = FeatureMap;

/// Largest label in a mask set. Throws InvalidMasks when labels 1..N are not
/// all present.
int instance_count(const InstanceMaskSet& masks);

/// Largest label without the contiguity check.
int max_label(const InstanceMaskSet& masks);

}  // namespace glass3d
