#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace rdcount {

/** @file Register-blocked row-major GEMM tuned for single-core use.
 *
 *  The microkernel keeps an MR x NR accumulator tile in registers and relies
 *  on compiler auto-vectorization of the fixed-trip-count inner loops (with
 *  -march=native this maps onto FMA vector units). The driver blocks the
 *  inner dimension so the B panel stays cache-resident. Loops are strictly
 *  ordered and serial, so results are bit-deterministic run to run.
 */
namespace gemm_detail {

// Accumulator tile: MR rows x NR columns. NR is sized to a few full vector
// registers per row (float: 64 lanes = 4x16 with AVX-512, still 4x8 with AVX2).
template <typename T>
inline constexpr int kNR = 256 / static_cast<int>(sizeof(T)); // 64 floats / 32 doubles

inline constexpr int kMR = 4;
inline constexpr int kKC = 256; // inner-dimension block

template <typename T, int MR, int NR>
void micro_kernel(int kc, const T* __restrict a, std::size_t lda,
                  const T* __restrict b, std::size_t ldb,
                  T* __restrict c, std::size_t ldc) {
    T acc[MR][NR] = {};
    for (int k = 0; k < kc; ++k) {
        const T* __restrict bk = b + static_cast<std::size_t>(k) * ldb;
        for (int m = 0; m < MR; ++m) {
            const T av = a[static_cast<std::size_t>(m) * lda + static_cast<std::size_t>(k)];
            for (int n = 0; n < NR; ++n) {
                acc[m][n] += av * bk[n];
            }
        }
    }
    for (int m = 0; m < MR; ++m) {
        T* __restrict cm = c + static_cast<std::size_t>(m) * ldc;
        for (int n = 0; n < NR; ++n) {
            cm[n] += acc[m][n];
        }
    }
}

/** Columns [0, nr) with nr < NR: same structure, runtime column count. */
template <typename T, int MR>
void micro_kernel_tail(int kc, int nr, const T* __restrict a, std::size_t lda,
                       const T* __restrict b, std::size_t ldb,
                       T* __restrict c, std::size_t ldc) {
    constexpr int kMaxNR = kNR<T>;
    T acc[MR][kMaxNR] = {};
    for (int k = 0; k < kc; ++k) {
        const T* __restrict bk = b + static_cast<std::size_t>(k) * ldb;
        for (int m = 0; m < MR; ++m) {
            const T av = a[static_cast<std::size_t>(m) * lda + static_cast<std::size_t>(k)];
            for (int n = 0; n < nr; ++n) {
                acc[m][n] += av * bk[n];
            }
        }
    }
    for (int m = 0; m < MR; ++m) {
        T* __restrict cm = c + static_cast<std::size_t>(m) * ldc;
        for (int n = 0; n < nr; ++n) {
            cm[n] += acc[m][n];
        }
    }
}

template <typename T>
void block_panel(int mr, int nc, int kc, const T* a, std::size_t lda,
                 const T* b, std::size_t ldb, T* c, std::size_t ldc) {
    constexpr int NR = kNR<T>;
    int j = 0;
    for (; j + NR <= nc; j += NR) {
        switch (mr) {
            case 4: micro_kernel<T, 4, NR>(kc, a, lda, b + j, ldb, c + j, ldc); break;
            case 3: micro_kernel<T, 3, NR>(kc, a, lda, b + j, ldb, c + j, ldc); break;
            case 2: micro_kernel<T, 2, NR>(kc, a, lda, b + j, ldb, c + j, ldc); break;
            default: micro_kernel<T, 1, NR>(kc, a, lda, b + j, ldb, c + j, ldc); break;
        }
    }
    if (j < nc) {
        const int nr = nc - j;
        switch (mr) {
            case 4: micro_kernel_tail<T, 4>(kc, nr, a, lda, b + j, ldb, c + j, ldc); break;
            case 3: micro_kernel_tail<T, 3>(kc, nr, a, lda, b + j, ldb, c + j, ldc); break;
            case 2: micro_kernel_tail<T, 2>(kc, nr, a, lda, b + j, ldb, c + j, ldc); break;
            default: micro_kernel_tail<T, 1>(kc, nr, a, lda, b + j, ldb, c + j, ldc); break;
        }
    }
}

} // namespace gemm_detail

/** @brief C (rows x cols) = A (rows x inner) * B (inner x cols), row-major,
 *         accumulating into C when `accumulate`, overwriting otherwise. */
template <typename T>
void gemm_nn(int rows, int cols, int inner,
             const T* a, std::size_t lda,
             const T* b, std::size_t ldb,
             T* c, std::size_t ldc, bool accumulate = false) {
    using namespace gemm_detail;
    if (!accumulate) {
        for (int i = 0; i < rows; ++i) {
            std::fill(c + static_cast<std::size_t>(i) * ldc,
                      c + static_cast<std::size_t>(i) * ldc + cols, T{});
        }
    }
    for (int k0 = 0; k0 < inner; k0 += kKC) {
        const int kc = std::min(kKC, inner - k0);
        const T* bp = b + static_cast<std::size_t>(k0) * ldb;
        int i = 0;
        for (; i + kMR <= rows; i += kMR) {
            block_panel<T>(kMR, cols, kc,
                           a + static_cast<std::size_t>(i) * lda + static_cast<std::size_t>(k0), lda,
                           bp, ldb, c + static_cast<std::size_t>(i) * ldc, ldc);
        }
        if (i < rows) {
            block_panel<T>(rows - i, cols, kc,
                           a + static_cast<std::size_t>(i) * lda + static_cast<std::size_t>(k0), lda,
                           bp, ldb, c + static_cast<std::size_t>(i) * ldc, ldc);
        }
    }
}

/** @brief out (cols x rows) = transpose of a (rows x cols), row-major. */
template <typename T>
void transpose(int rows, int cols, const T* a, std::size_t lda, T* out, std::size_t ldo) {
    constexpr int kTile = 32;
    for (int i0 = 0; i0 < rows; i0 += kTile) {
        const int i1 = std::min(i0 + kTile, rows);
        for (int j0 = 0; j0 < cols; j0 += kTile) {
            const int j1 = std::min(j0 + kTile, cols);
            for (int i = i0; i < i1; ++i) {
                for (int j = j0; j < j1; ++j) {
                    out[static_cast<std::size_t>(j) * ldo + static_cast<std::size_t>(i)] =
                        a[static_cast<std::size_t>(i) * lda + static_cast<std::size_t>(j)];
                }
            }
        }
    }
}

/** @brief C (rows x cols) = A^T * B where A is (inner x rows) row-major.
 *         Transposes A into `scratch` then runs the contiguous kernel. */
template <typename T>
void gemm_tn(int rows, int cols, int inner,
             const T* a, std::size_t lda,
             const T* b, std::size_t ldb,
             T* c, std::size_t ldc,
             std::vector<T>& scratch, bool accumulate = false) {
    scratch.resize(static_cast<std::size_t>(rows) * inner);
    transpose(inner, rows, a, lda, scratch.data(), static_cast<std::size_t>(inner));
    gemm_nn(rows, cols, inner, scratch.data(), static_cast<std::size_t>(inner), b, ldb, c, ldc,
            accumulate);
}

/** @brief C (rows x cols) = A * B^T where B is (cols x inner) row-major.
 *         Transposes B into `scratch` then runs the contiguous kernel. */
template <typename T>
void gemm_nt(int rows, int cols, int inner,
             const T* a, std::size_t lda,
             const T* b, std::size_t ldb,
             T* c, std::size_t ldc,
             std::vector<T>& scratch, bool accumulate = false) {
    scratch.resize(static_cast<std::size_t>(inner) * cols);
    transpose(cols, inner, b, ldb, scratch.data(), static_cast<std::size_t>(cols));
    gemm_nn(rows, cols, inner, a, lda, scratch.data(), static_cast<std::size_t>(cols), c, ldc,
            accumulate);
}

} // namespace rdcount
