#pragma once

#include <cassert>
#include <complex>
#include <cstddef>
#include <vector>

namespace rdcount {

/** @brief Minimal dense row-major matrix used for frames, windows, and
 *         range-Doppler maps (not for neural-network tensors). */
template <typename T>
class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
        assert(rows >= 0 && cols >= 0);
    }

    [[nodiscard]] int rows() const { return rows_; }
    [[nodiscard]] int cols() const { return cols_; }
    [[nodiscard]] std::size_t size() const { return data_.size(); }

    T& operator()(int r, int c) {
        assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
        return data_[static_cast<std::size_t>(r) * cols_ + c];
    }
    const T& operator()(int r, int c) const {
        assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
        return data_[static_cast<std::size_t>(r) * cols_ + c];
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    bool operator==(const Mat&) const = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

using RealMat = Mat<double>;
using ComplexMat = Mat<std::complex<double>>;

} // namespace rdcount
