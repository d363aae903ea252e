#pragma once

#include "rdcount/errors.hpp"
#include "rdcount/gemm.hpp"
#include "rdcount/random_source.hpp"
#include "rdcount/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

namespace rdcount {

/** @file Neural-network layer primitives: forward passes and exact analytic
 *        backward passes. All backward functions OVERWRITE their gradient
 *        outputs (one call computes the full batch gradient). Every loop is
 *        serial with a fixed traversal order, so results are deterministic.
 */

// ---------------------------------------------------------------------------
// im2col convolution, stride 1, zero same-padding
// ---------------------------------------------------------------------------

/** @brief Unfold x (B,H,W,C) into rows of kh*kw*C patch values per output
 *         pixel; row index is (b, y, x) in scan order, columns are
 *         (ky, kx, ci) with ci innermost — matching the conv weight layout. */
template <typename T>
void im2col(const Tensor<T>& x, int kh, int kw, int pad, std::vector<T>& cols) {
    const int b_n = x.n(), hh = x.h(), ww = x.w(), cc = x.c();
    const std::size_t patch = static_cast<std::size_t>(kh) * kw * cc;
    cols.resize(static_cast<std::size_t>(b_n) * hh * ww * patch);
    T* out = cols.data();
    for (int b = 0; b < b_n; ++b) {
        for (int y = 0; y < hh; ++y) {
            for (int x0 = 0; x0 < ww; ++x0) {
                for (int ky = 0; ky < kh; ++ky) {
                    const int iy = y + ky - pad;
                    if (iy < 0 || iy >= hh) {
                        std::memset(out, 0, static_cast<std::size_t>(kw) * cc * sizeof(T));
                        out += static_cast<std::size_t>(kw) * cc;
                        continue;
                    }
                    for (int kx = 0; kx < kw; ++kx) {
                        const int ix = x0 + kx - pad;
                        if (ix < 0 || ix >= ww) {
                            std::memset(out, 0, static_cast<std::size_t>(cc) * sizeof(T));
                        } else {
                            std::memcpy(out, &x(b, iy, ix, 0),
                                        static_cast<std::size_t>(cc) * sizeof(T));
                        }
                        out += cc;
                    }
                }
            }
        }
    }
}

/** @brief Scatter-add of the unfolded gradient back onto dx (B,H,W,C). */
template <typename T>
void col2im(const std::vector<T>& cols, int kh, int kw, int pad, Tensor<T>& dx) {
    const int b_n = dx.n(), hh = dx.h(), ww = dx.w(), cc = dx.c();
    dx.zero();
    const T* in = cols.data();
    for (int b = 0; b < b_n; ++b) {
        for (int y = 0; y < hh; ++y) {
            for (int x0 = 0; x0 < ww; ++x0) {
                for (int ky = 0; ky < kh; ++ky) {
                    const int iy = y + ky - pad;
                    if (iy < 0 || iy >= hh) {
                        in += static_cast<std::size_t>(kw) * cc;
                        continue;
                    }
                    for (int kx = 0; kx < kw; ++kx) {
                        const int ix = x0 + kx - pad;
                        if (ix >= 0 && ix < ww) {
                            T* dst = &dx(b, iy, ix, 0);
                            for (int ch = 0; ch < cc; ++ch) dst[ch] += in[ch];
                        }
                        in += cc;
                    }
                }
            }
        }
    }
}

/** @brief Convolution forward: out (B,H,W,Cout) = x (B,H,W,Cin) * w
 *         (kh,kw,Cin,Cout) + bias, stride 1, zero padding (kh-1)/2.
 *         `cols` receives the im2col unfold (cached for backward); the 1x1
 *         kernel skips the unfold entirely. */
template <typename T>
void conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                    Tensor<T>& out, std::vector<T>& cols) {
    const int kh = w.dim(0), kw = w.dim(1), cin = w.dim(2), cout = w.dim(3);
    if (x.c() != cin || out.c() != cout || out.n() != x.n() || out.h() != x.h() ||
        out.w() != x.w() || bias.size() != static_cast<std::size_t>(cout)) {
        throw DomainError("conv2d_forward: shape mismatch");
    }
    const int rows = x.n() * x.h() * x.w();
    const int inner = kh * kw * cin;
    const T* a = nullptr;
    if (kh == 1 && kw == 1) {
        a = x.data(); // unfold of a 1x1 kernel is the input itself
    } else {
        im2col(x, kh, kw, (kh - 1) / 2, cols);
        a = cols.data();
    }
    gemm_nn(rows, cout, inner, a, static_cast<std::size_t>(inner), w.data(),
            static_cast<std::size_t>(cout), out.data(), static_cast<std::size_t>(cout));
    T* o = out.data();
    const T* bp = bias.data();
    for (int r = 0; r < rows; ++r, o += cout) {
        for (int ch = 0; ch < cout; ++ch) o[ch] += bp[ch];
    }
}

/** @brief Convolution backward. `cols` must hold the forward unfold (ignored
 *         for 1x1); `scratch` is resized as needed. Computes dw, dbias, and
 *         (when dx != nullptr) dx. */
template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dout,
                     Tensor<T>& dw, Tensor<T>& dbias, Tensor<T>* dx,
                     const std::vector<T>& cols, std::vector<T>& dcols,
                     std::vector<T>& scratch) {
    const int kh = w.dim(0), kw = w.dim(1), cin = w.dim(2), cout = w.dim(3);
    const int rows = x.n() * x.h() * x.w();
    const int inner = kh * kw * cin;

    T* db = dbias.data();
    std::fill(db, db + cout, T{});
    const T* d = dout.data();
    for (int r = 0; r < rows; ++r, d += cout) {
        for (int ch = 0; ch < cout; ++ch) db[ch] += d[ch];
    }

    const T* a = (kh == 1 && kw == 1) ? x.data() : cols.data();
    // dw (inner x cout) = unfold^T (inner x rows) * dout (rows x cout)
    gemm_tn(inner, cout, rows, a, static_cast<std::size_t>(inner), dout.data(),
            static_cast<std::size_t>(cout), dw.data(), static_cast<std::size_t>(cout), scratch);

    if (dx != nullptr) {
        if (kh == 1 && kw == 1) {
            gemm_nt(rows, cin, cout, dout.data(), static_cast<std::size_t>(cout), w.data(),
                    static_cast<std::size_t>(cout), dx->data(), static_cast<std::size_t>(cin),
                    scratch);
        } else {
            dcols.resize(static_cast<std::size_t>(rows) * inner);
            gemm_nt(rows, inner, cout, dout.data(), static_cast<std::size_t>(cout), w.data(),
                    static_cast<std::size_t>(cout), dcols.data(), static_cast<std::size_t>(inner),
                    scratch);
            col2im(dcols, kh, kw, (kh - 1) / 2, *dx);
        }
    }
}

// ---------------------------------------------------------------------------
// Batch normalization (per channel over batch and spatial extent)
// ---------------------------------------------------------------------------

/** @brief Per-call cache of batch statistics needed by the backward pass. */
struct BnCache {
    std::vector<double> mean;
    std::vector<double> invstd;
};

/** @brief Train-mode BN: normalizes with biased batch statistics, applies
 *         scale/shift, stores xhat for backward, and folds the batch stats
 *         into the running estimates with the given momentum. */
template <typename T>
void bn_forward_train(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                      double momentum, double eps, Tensor<T>& out, Tensor<T>& xhat,
                      Tensor<T>& run_mean, Tensor<T>& run_var, BnCache& cache) {
    const int cc = x.c();
    const std::size_t n_spatial = x.size() / static_cast<std::size_t>(cc);
    cache.mean.assign(static_cast<std::size_t>(cc), 0.0);
    cache.invstd.assign(static_cast<std::size_t>(cc), 0.0);
    std::vector<double> var(static_cast<std::size_t>(cc), 0.0);

    const T* p = x.data();
    for (std::size_t i = 0; i < n_spatial; ++i, p += cc) {
        for (int ch = 0; ch < cc; ++ch) cache.mean[static_cast<std::size_t>(ch)] += p[ch];
    }
    for (int ch = 0; ch < cc; ++ch) cache.mean[static_cast<std::size_t>(ch)] /= static_cast<double>(n_spatial);

    p = x.data();
    for (std::size_t i = 0; i < n_spatial; ++i, p += cc) {
        for (int ch = 0; ch < cc; ++ch) {
            const double dd = p[ch] - cache.mean[static_cast<std::size_t>(ch)];
            var[static_cast<std::size_t>(ch)] += dd * dd;
        }
    }
    for (int ch = 0; ch < cc; ++ch) {
        var[static_cast<std::size_t>(ch)] /= static_cast<double>(n_spatial); // biased
        cache.invstd[static_cast<std::size_t>(ch)] = 1.0 / std::sqrt(var[static_cast<std::size_t>(ch)] + eps);
    }

    p = x.data();
    T* xh = xhat.data();
    T* o = out.data();
    const T* g = gamma.data();
    const T* bt = beta.data();
    for (std::size_t i = 0; i < n_spatial; ++i, p += cc, xh += cc, o += cc) {
        for (int ch = 0; ch < cc; ++ch) {
            const double v = (p[ch] - cache.mean[static_cast<std::size_t>(ch)]) *
                             cache.invstd[static_cast<std::size_t>(ch)];
            xh[ch] = static_cast<T>(v);
            o[ch] = static_cast<T>(g[ch] * v + bt[ch]);
        }
    }

    T* rm = run_mean.data();
    T* rv = run_var.data();
    for (int ch = 0; ch < cc; ++ch) {
        rm[ch] = static_cast<T>((1.0 - momentum) * rm[ch] + momentum * cache.mean[static_cast<std::size_t>(ch)]);
        rv[ch] = static_cast<T>((1.0 - momentum) * rv[ch] + momentum * var[static_cast<std::size_t>(ch)]);
    }
}

/** @brief Eval-mode BN: normalizes with the running statistics. */
template <typename T>
void bn_forward_eval(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     const Tensor<T>& run_mean, const Tensor<T>& run_var, double eps,
                     Tensor<T>& out) {
    const int cc = x.c();
    const std::size_t n_spatial = x.size() / static_cast<std::size_t>(cc);
    std::vector<double> shift(static_cast<std::size_t>(cc));
    std::vector<double> scale(static_cast<std::size_t>(cc));
    for (int ch = 0; ch < cc; ++ch) {
        const double inv = 1.0 / std::sqrt(static_cast<double>(run_var.data()[ch]) + eps);
        scale[static_cast<std::size_t>(ch)] = gamma.data()[ch] * inv;
        shift[static_cast<std::size_t>(ch)] =
            beta.data()[ch] - run_mean.data()[ch] * scale[static_cast<std::size_t>(ch)];
    }
    const T* p = x.data();
    T* o = out.data();
    for (std::size_t i = 0; i < n_spatial; ++i, p += cc, o += cc) {
        for (int ch = 0; ch < cc; ++ch) {
            o[ch] = static_cast<T>(p[ch] * scale[static_cast<std::size_t>(ch)] +
                                   shift[static_cast<std::size_t>(ch)]);
        }
    }
}

/** @brief Train-mode BN backward from cached xhat and batch statistics. */
template <typename T>
void bn_backward(const Tensor<T>& xhat, const Tensor<T>& gamma, const Tensor<T>& dout,
                 const BnCache& cache, Tensor<T>& dgamma, Tensor<T>& dbeta, Tensor<T>& dx) {
    const int cc = xhat.c();
    const std::size_t n_spatial = xhat.size() / static_cast<std::size_t>(cc);
    std::vector<double> sum_d(static_cast<std::size_t>(cc), 0.0);
    std::vector<double> sum_dx(static_cast<std::size_t>(cc), 0.0);

    const T* d = dout.data();
    const T* xh = xhat.data();
    for (std::size_t i = 0; i < n_spatial; ++i, d += cc, xh += cc) {
        for (int ch = 0; ch < cc; ++ch) {
            sum_d[static_cast<std::size_t>(ch)] += d[ch];
            sum_dx[static_cast<std::size_t>(ch)] += static_cast<double>(d[ch]) * xh[ch];
        }
    }
    for (int ch = 0; ch < cc; ++ch) {
        dgamma.data()[ch] = static_cast<T>(sum_dx[static_cast<std::size_t>(ch)]);
        dbeta.data()[ch] = static_cast<T>(sum_d[static_cast<std::size_t>(ch)]);
    }

    const double inv_n = 1.0 / static_cast<double>(n_spatial);
    d = dout.data();
    xh = xhat.data();
    T* out = dx.data();
    for (std::size_t i = 0; i < n_spatial; ++i, d += cc, xh += cc, out += cc) {
        for (int ch = 0; ch < cc; ++ch) {
            const double coeff = gamma.data()[ch] * cache.invstd[static_cast<std::size_t>(ch)];
            out[ch] = static_cast<T>(
                coeff * (d[ch] - inv_n * (sum_d[static_cast<std::size_t>(ch)] +
                                          xh[ch] * sum_dx[static_cast<std::size_t>(ch)])));
        }
    }
}

/** @brief Eval-mode BN backward (running statistics are constants). */
template <typename T>
void bn_backward_eval(const Tensor<T>& gamma, const Tensor<T>& run_var, double eps,
                      const Tensor<T>& dout, Tensor<T>& dx) {
    const int cc = dx.c();
    const std::size_t n_spatial = dx.size() / static_cast<std::size_t>(cc);
    std::vector<double> scale(static_cast<std::size_t>(cc));
    for (int ch = 0; ch < cc; ++ch) {
        scale[static_cast<std::size_t>(ch)] =
            gamma.data()[ch] / std::sqrt(static_cast<double>(run_var.data()[ch]) + eps);
    }
    const T* d = dout.data();
    T* out = dx.data();
    for (std::size_t i = 0; i < n_spatial; ++i, d += cc, out += cc) {
        for (int ch = 0; ch < cc; ++ch) {
            out[ch] = static_cast<T>(d[ch] * scale[static_cast<std::size_t>(ch)]);
        }
    }
}

// ---------------------------------------------------------------------------
// ReLU, max pooling, dropout, global average pool
// ---------------------------------------------------------------------------

template <typename T>
void relu_forward(const Tensor<T>& x, Tensor<T>& out) {
    const T* p = x.data();
    T* o = out.data();
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) o[i] = p[i] > T{} ? p[i] : T{};
}

/** @brief dx = dout where the pre-activation was > 0, else 0. */
template <typename T>
void relu_backward(const Tensor<T>& x_pre, const Tensor<T>& dout, Tensor<T>& dx) {
    const T* p = x_pre.data();
    const T* d = dout.data();
    T* o = dx.data();
    const std::size_t n = x_pre.size();
    for (std::size_t i = 0; i < n; ++i) o[i] = p[i] > T{} ? d[i] : T{};
}

/** @brief 2x2 max pool, stride 2, floor semantics (odd trailing row/column
 *         dropped). Ties select the first maximal element in scan order.
 *         idx records the flat input index feeding each output. */
template <typename T>
void maxpool2x2_forward(const Tensor<T>& x, Tensor<T>& out, std::vector<std::int64_t>& idx) {
    const int b_n = x.n(), hh = x.h(), ww = x.w(), cc = x.c();
    const int oh = hh / 2, ow = ww / 2;
    idx.resize(out.size());
    const auto x_flat = [&](int b, int y, int x0, int ch) -> std::size_t {
        return ((static_cast<std::size_t>(b) * hh + y) * ww + x0) * cc + ch;
    };
    std::size_t o = 0;
    for (int b = 0; b < b_n; ++b) {
        for (int y = 0; y < oh; ++y) {
            for (int x0 = 0; x0 < ow; ++x0) {
                for (int ch = 0; ch < cc; ++ch, ++o) {
                    std::size_t best = x_flat(b, 2 * y, 2 * x0, ch);
                    T best_v = x.data()[best];
                    // scan order: (0,0), (0,1), (1,0), (1,1); strict > keeps first
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dxp = 0; dxp < 2; ++dxp) {
                            if (dy == 0 && dxp == 0) continue;
                            const std::size_t cand = x_flat(b, 2 * y + dy, 2 * x0 + dxp, ch);
                            const T v = x.data()[cand];
                            if (v > best_v) {
                                best_v = v;
                                best = cand;
                            }
                        }
                    }
                    out.data()[o] = best_v;
                    idx[o] = static_cast<std::int64_t>(best);
                }
            }
        }
    }
}

template <typename T>
void maxpool2x2_backward(const std::vector<std::int64_t>& idx, const Tensor<T>& dout,
                         Tensor<T>& dx) {
    dx.zero();
    const T* d = dout.data();
    const std::size_t n = dout.size();
    for (std::size_t i = 0; i < n; ++i) {
        dx.data()[static_cast<std::size_t>(idx[i])] += d[i];
    }
}

/** @brief Inverted dropout: kept elements scale by 1/(1-p) at train time so
 *         the eval forward needs no compensation. Mask stores the applied
 *         scale (0 or 1/(1-p)), consumed by backward. Draw order is the flat
 *         scan of the tensor. */
template <typename T>
void dropout_forward_train(const Tensor<T>& x, double p, RandomSource& rng, Tensor<T>& out,
                           Tensor<T>& mask) {
    const double keep_scale = 1.0 / (1.0 - p);
    const T* xp = x.data();
    T* o = out.data();
    T* m = mask.data();
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        const T s = rng.uniform01() >= p ? static_cast<T>(keep_scale) : T{};
        m[i] = s;
        o[i] = xp[i] * s;
    }
}

template <typename T>
void dropout_backward(const Tensor<T>& mask, const Tensor<T>& dout, Tensor<T>& dx) {
    const T* m = mask.data();
    const T* d = dout.data();
    T* o = dx.data();
    const std::size_t n = mask.size();
    for (std::size_t i = 0; i < n; ++i) o[i] = d[i] * m[i];
}

/** @brief Global average pool (B,H,W,C) -> (B,1,1,C). */
template <typename T>
void gap_forward(const Tensor<T>& x, Tensor<T>& out) {
    const int b_n = x.n(), hh = x.h(), ww = x.w(), cc = x.c();
    const std::size_t spatial = static_cast<std::size_t>(hh) * ww;
    for (int b = 0; b < b_n; ++b) {
        const T* p = x.data() + static_cast<std::size_t>(b) * spatial * cc;
        std::vector<double> acc(static_cast<std::size_t>(cc), 0.0);
        for (std::size_t i = 0; i < spatial; ++i, p += cc) {
            for (int ch = 0; ch < cc; ++ch) acc[static_cast<std::size_t>(ch)] += p[ch];
        }
        for (int ch = 0; ch < cc; ++ch) {
            out(b, 0, 0, ch) = static_cast<T>(acc[static_cast<std::size_t>(ch)] /
                                              static_cast<double>(spatial));
        }
    }
}

template <typename T>
void gap_backward(const Tensor<T>& dout, Tensor<T>& dx) {
    const int b_n = dx.n(), hh = dx.h(), ww = dx.w(), cc = dx.c();
    const std::size_t spatial = static_cast<std::size_t>(hh) * ww;
    const double inv = 1.0 / static_cast<double>(spatial);
    for (int b = 0; b < b_n; ++b) {
        T* o = dx.data() + static_cast<std::size_t>(b) * spatial * cc;
        for (std::size_t i = 0; i < spatial; ++i, o += cc) {
            for (int ch = 0; ch < cc; ++ch) {
                o[ch] = static_cast<T>(dout(b, 0, 0, ch) * inv);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Fully connected + fused softmax / cross-entropy
// ---------------------------------------------------------------------------

/** @brief out (B,1,1,Cout) = x (B,1,1,Cin) * w (1,1,Cin,Cout) + bias. */
template <typename T>
void dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                   Tensor<T>& out) {
    const int b_n = x.n(), cin = w.dim(2), cout = w.dim(3);
    gemm_nn(b_n, cout, cin, x.data(), static_cast<std::size_t>(cin), w.data(),
            static_cast<std::size_t>(cout), out.data(), static_cast<std::size_t>(cout));
    T* o = out.data();
    for (int b = 0; b < b_n; ++b, o += cout) {
        for (int ch = 0; ch < cout; ++ch) o[ch] += bias.data()[ch];
    }
}

template <typename T>
void dense_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dout,
                    Tensor<T>& dw, Tensor<T>& dbias, Tensor<T>& dx, std::vector<T>& scratch) {
    const int b_n = x.n(), cin = w.dim(2), cout = w.dim(3);
    T* db = dbias.data();
    std::fill(db, db + cout, T{});
    const T* d = dout.data();
    for (int b = 0; b < b_n; ++b, d += cout) {
        for (int ch = 0; ch < cout; ++ch) db[ch] += d[ch];
    }
    gemm_tn(cin, cout, b_n, x.data(), static_cast<std::size_t>(cin), dout.data(),
            static_cast<std::size_t>(cout), dw.data(), static_cast<std::size_t>(cout), scratch);
    gemm_nt(b_n, cin, cout, dout.data(), static_cast<std::size_t>(cout), w.data(),
            static_cast<std::size_t>(cout), dx.data(), static_cast<std::size_t>(cin), scratch);
}

/** @brief Row-wise softmax of logits (B,1,1,C), numerically stabilized. */
template <typename T>
void softmax(const Tensor<T>& logits, Tensor<T>& probs) {
    const int b_n = logits.n(), cc = logits.c();
    for (int b = 0; b < b_n; ++b) {
        const T* z = logits.data() + static_cast<std::size_t>(b) * cc;
        T* p = probs.data() + static_cast<std::size_t>(b) * cc;
        double zmax = z[0];
        for (int ch = 1; ch < cc; ++ch) zmax = std::max(zmax, static_cast<double>(z[ch]));
        double denom = 0.0;
        for (int ch = 0; ch < cc; ++ch) denom += std::exp(static_cast<double>(z[ch]) - zmax);
        for (int ch = 0; ch < cc; ++ch) {
            p[ch] = static_cast<T>(std::exp(static_cast<double>(z[ch]) - zmax) / denom);
        }
    }
}

/** @brief Fused softmax + mean cross-entropy over the batch. Labels are
 *         0-based class indices. Returns mean -log p[label]; dlogits (when
 *         non-null) receives (p - onehot)/B, the exact gradient. */
template <typename T>
double softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels,
                             Tensor<T>& probs, Tensor<T>* dlogits) {
    const int b_n = logits.n(), cc = logits.c();
    if (static_cast<int>(labels.size()) != b_n) {
        throw DomainError("softmax_cross_entropy: labels size mismatch");
    }
    softmax(logits, probs);
    double loss = 0.0;
    const double inv_b = 1.0 / static_cast<double>(b_n);
    for (int b = 0; b < b_n; ++b) {
        const int label = labels[static_cast<std::size_t>(b)];
        if (label < 0 || label >= cc) {
            throw DomainError("softmax_cross_entropy: label out of range");
        }
        const T* p = probs.data() + static_cast<std::size_t>(b) * cc;
        loss -= std::log(std::max(static_cast<double>(p[label]), 1e-300));
        if (dlogits != nullptr) {
            T* dl = dlogits->data() + static_cast<std::size_t>(b) * cc;
            for (int ch = 0; ch < cc; ++ch) {
                dl[ch] = static_cast<T>((static_cast<double>(p[ch]) - (ch == label ? 1.0 : 0.0)) * inv_b);
            }
        }
    }
    return loss * inv_b;
}

} // namespace rdcount
