#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace tal {

/// Dense row-major matrix of doubles. Time runs down the rows; columns are
/// the parameters of a telemetry channel (column 0 is usually the target).
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    std::vector<double> column(std::size_t c) const {
        if (c >= cols) throw std::out_of_range("Matrix::column: index out of range");
        std::vector<double> out(rows);
        for (std::size_t r = 0; r < rows; ++r) out[r] = data[r * cols + c];
        return out;
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const Matrix& other) const = default;
};

}  // namespace tal
