#pragma once

#include "rdcount/digest.hpp"
#include "rdcount/errors.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace rdcount {

/** @brief Dense rank-4 tensor, row-major over (d0, d1, d2, d3).
 *
 *  Activations use (batch, height, width, channels) — channels innermost.
 *  Convolution weights use (kh, kw, in_channels, out_channels), which makes
 *  the flattened weight exactly the (patch x out) matrix the im2col GEMM
 *  consumes. Precision is a template parameter: float for training, double
 *  for finite-difference gradient checks.
 */
template <typename T>
class Tensor {
public:
    Tensor() = default;
    Tensor(int d0, int d1, int d2, int d3)
        : dims_{d0, d1, d2, d3},
          data_(static_cast<std::size_t>(d0) * d1 * d2 * d3, T{}) {
        assert(d0 >= 0 && d1 >= 0 && d2 >= 0 && d3 >= 0);
    }

    /** @brief Per-channel vector (BN parameters, biases): shape (1,1,1,c). */
    static Tensor per_channel(int c) { return Tensor(1, 1, 1, c); }

    [[nodiscard]] int dim(int i) const { return dims_[static_cast<std::size_t>(i)]; }
    [[nodiscard]] int n() const { return dims_[0]; }
    [[nodiscard]] int h() const { return dims_[1]; }
    [[nodiscard]] int w() const { return dims_[2]; }
    [[nodiscard]] int c() const { return dims_[3]; }
    [[nodiscard]] std::size_t size() const { return data_.size(); }
    [[nodiscard]] bool same_shape(const Tensor& o) const { return dims_ == o.dims_; }

    T& operator()(int i0, int i1, int i2, int i3) {
        return data_[flat(i0, i1, i2, i3)];
    }
    const T& operator()(int i0, int i1, int i2, int i3) const {
        return data_[flat(i0, i1, i2, i3)];
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    void zero() { std::fill(data_.begin(), data_.end(), T{}); }
    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    /** @brief Convert element-wise (float <-> double round trips for tests). */
    template <typename U>
    [[nodiscard]] Tensor<U> cast() const {
        Tensor<U> out(dims_[0], dims_[1], dims_[2], dims_[3]);
        for (std::size_t i = 0; i < data_.size(); ++i) {
            out.data()[i] = static_cast<U>(data_[i]);
        }
        return out;
    }

    void update_digest(Fnv1a& d) const {
        for (int v : dims_) d.update_value(v);
        d.update(data_.data(), data_.size() * sizeof(T));
    }

    bool operator==(const Tensor&) const = default;

private:
    [[nodiscard]] std::size_t flat(int i0, int i1, int i2, int i3) const {
        assert(i0 >= 0 && i0 < dims_[0] && i1 >= 0 && i1 < dims_[1] &&
               i2 >= 0 && i2 < dims_[2] && i3 >= 0 && i3 < dims_[3]);
        return ((static_cast<std::size_t>(i0) * dims_[1] + i1) * dims_[2] + i2) * dims_[3] + i3;
    }

    std::array<int, 4> dims_{0, 0, 0, 0};
    std::vector<T> data_;
};

/** @brief In-place per-sample, per-channel standardization over the spatial
 *         extent: x -> (x - mean) / max(std, 1e-6). Population std; constant
 *         channels map to all-zero. */
template <typename T>
void zscore_inplace(Tensor<T>& x) {
    const int b_n = x.n(), hh = x.h(), ww = x.w(), cc = x.c();
    const std::size_t spatial = static_cast<std::size_t>(hh) * ww;
    std::vector<double> mean(static_cast<std::size_t>(cc));
    std::vector<double> scale(static_cast<std::size_t>(cc));
    for (int b = 0; b < b_n; ++b) {
        T* base = x.data() + static_cast<std::size_t>(b) * spatial * cc;
        std::fill(mean.begin(), mean.end(), 0.0);
        for (std::size_t i = 0; i < spatial; ++i) {
            const T* p = base + i * cc;
            for (int ch = 0; ch < cc; ++ch) mean[static_cast<std::size_t>(ch)] += p[ch];
        }
        for (int ch = 0; ch < cc; ++ch) mean[static_cast<std::size_t>(ch)] /= static_cast<double>(spatial);
        std::fill(scale.begin(), scale.end(), 0.0);
        for (std::size_t i = 0; i < spatial; ++i) {
            const T* p = base + i * cc;
            for (int ch = 0; ch < cc; ++ch) {
                const double d = p[ch] - mean[static_cast<std::size_t>(ch)];
                scale[static_cast<std::size_t>(ch)] += d * d;
            }
        }
        for (int ch = 0; ch < cc; ++ch) {
            const double sd = std::sqrt(scale[static_cast<std::size_t>(ch)] / static_cast<double>(spatial));
            scale[static_cast<std::size_t>(ch)] = 1.0 / std::max(sd, 1e-6);
        }
        for (std::size_t i = 0; i < spatial; ++i) {
            T* p = base + i * cc;
            for (int ch = 0; ch < cc; ++ch) {
                p[ch] = static_cast<T>((p[ch] - mean[static_cast<std::size_t>(ch)]) *
                                       scale[static_cast<std::size_t>(ch)]);
            }
        }
    }
}

} // namespace rdcount
