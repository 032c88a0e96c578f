#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "tal/matrix.hpp"

namespace tal {

/// Sliding next-step regression windows over a channel matrix.
/// inputs is an [N x w x D] tensor stored flat; window i covers rows
/// [i, i+w) of the source and targets[i] is the target column at row i+w,
/// so N = T - w.
struct WindowedDataset {
    std::size_t window = 0;
    std::size_t dims = 0;
    std::vector<double> inputs;
    std::vector<double> targets;

    std::size_t count() const { return targets.size(); }
    std::span<const double> input(std::size_t i) const {
        return {inputs.data() + i * window * dims, window * dims};
    }
};

inline WindowedDataset make_windows(const Matrix& data, std::size_t target_index,
                                    std::size_t window) {
    if (window < 1) throw std::invalid_argument("make_windows: window must be >= 1");
    if (data.rows <= window)
        throw std::invalid_argument("make_windows: series length " + std::to_string(data.rows) +
                                    " must exceed window " + std::to_string(window));
    if (target_index >= data.cols) throw std::invalid_argument("make_windows: target index out of range");

    WindowedDataset ds;
    ds.window = window;
    ds.dims = data.cols;
    const std::size_t n = data.rows - window;
    ds.inputs.reserve(n * window * data.cols);
    ds.targets.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* begin = data.data.data() + i * data.cols;
        ds.inputs.insert(ds.inputs.end(), begin, begin + window * data.cols);
        ds.targets.push_back(data.at(i + window, target_index));
    }
    return ds;
}

}  // namespace tal
