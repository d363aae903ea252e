#pragma once

/** @file Independent reference implementations (direct double sums, naive
 *        matrix products, finite differences) used to cross-check the
 *        optimized library code, plus small filesystem test utilities.
 *        Everything here favors obviousness over speed.
 */

#include "rdcount/mat.hpp"
#include "rdcount/ofdm.hpp"
#include "rdcount/scene.hpp"
#include "rdcount/tensor.hpp"
#include "rdcount/window.hpp"

#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace rdtest {

// ---------------------------------------------------------------------------
// Filesystem helper
// ---------------------------------------------------------------------------

/** @brief Unique temp directory, removed (recursively) on destruction. */
class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "rdcount_test_XXXXXX").string();
        if (::mkdtemp(tmpl.data()) == nullptr) {
            throw std::runtime_error("mkdtemp failed");
        }
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// Direct-sum range-Doppler reference
// ---------------------------------------------------------------------------

/** @brief O(N_out * N_in) direct evaluation of the windowed periodogram:
 *         out(n, m) = |sum_{k,l} F(k,l) W(k,l) e^{+j2pi kn/n_fft}
 *         e^{-j2pi lm/m_per}|^2 / (n_fft * m_symbols). */
inline rdcount::RealMat naive_periodogram(const rdcount::NormalizedFrame& frame,
                                          const rdcount::Window2d& window,
                                          const rdcount::OfdmConfig& cfg) {
    rdcount::RealMat out(cfg.n_fft, cfg.m_per);
    const double two_pi = 2.0 * std::numbers::pi;
    const double scale = 1.0 / (static_cast<double>(cfg.n_fft) * cfg.m_symbols);
    for (int n = 0; n < cfg.n_fft; ++n) {
        for (int m = 0; m < cfg.m_per; ++m) {
            std::complex<double> acc(0.0, 0.0);
            for (int k = 0; k < cfg.n_use; ++k) {
                for (int l = 0; l < cfg.m_symbols; ++l) {
                    const double w = window.row_weights[static_cast<std::size_t>(k)] *
                                     window.col_weights[static_cast<std::size_t>(l)];
                    const double ang = two_pi * (static_cast<double>(k) * n / cfg.n_fft -
                                                 static_cast<double>(l) * m / cfg.m_per);
                    acc += frame.data(k, l) * w * std::polar(1.0, ang);
                }
            }
            out(n, m) = std::norm(acc) * scale;
        }
    }
    return out;
}

/** @brief Direct evaluation of one frame entry from its target list:
 *         sum_h b_h e^{j(phi_h - 2pi k tau_h df + 2pi l T_O f_D,h)}. */
inline std::complex<double> direct_frame_entry(const rdcount::OfdmConfig& cfg,
                                               const std::vector<rdcount::Target>& targets,
                                               int k, int l) {
    const double two_pi = 2.0 * std::numbers::pi;
    std::complex<double> acc(0.0, 0.0);
    for (const auto& t : targets) {
        const double ang = t.phase - two_pi * k * t.delay * cfg.delta_f +
                           two_pi * l * cfg.t_o() * t.doppler;
        acc += std::polar(t.amplitude, ang);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Naive linear algebra
// ---------------------------------------------------------------------------

/** @brief Triple-loop C = A * B (+ C when accumulate), row-major. */
template <typename T>
void naive_gemm(int rows, int cols, int inner, const T* a, std::size_t lda, const T* b,
                std::size_t ldb, T* c, std::size_t ldc, bool accumulate = false) {
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            double acc = accumulate ? static_cast<double>(c[static_cast<std::size_t>(i) * ldc + j]) : 0.0;
            for (int k = 0; k < inner; ++k) {
                acc += static_cast<double>(a[static_cast<std::size_t>(i) * lda + k]) *
                       static_cast<double>(b[static_cast<std::size_t>(k) * ldb + j]);
            }
            c[static_cast<std::size_t>(i) * ldc + j] = static_cast<T>(acc);
        }
    }
}

/** @brief Direct same-padded stride-1 convolution (B,H,W,Cin) -> (B,H,W,Cout). */
template <typename T>
rdcount::Tensor<T> naive_conv2d(const rdcount::Tensor<T>& x, const rdcount::Tensor<T>& w,
                                const rdcount::Tensor<T>& bias) {
    const int kh = w.dim(0), kw = w.dim(1), cin = w.dim(2), cout = w.dim(3);
    const int pad = (kh - 1) / 2;
    rdcount::Tensor<T> out(x.n(), x.h(), x.w(), cout);
    for (int b = 0; b < x.n(); ++b) {
        for (int y = 0; y < x.h(); ++y) {
            for (int x0 = 0; x0 < x.w(); ++x0) {
                for (int co = 0; co < cout; ++co) {
                    double acc = bias.data()[co];
                    for (int ky = 0; ky < kh; ++ky) {
                        for (int kx = 0; kx < kw; ++kx) {
                            const int iy = y + ky - pad;
                            const int ix = x0 + kx - pad;
                            if (iy < 0 || iy >= x.h() || ix < 0 || ix >= x.w()) continue;
                            for (int ci = 0; ci < cin; ++ci) {
                                acc += static_cast<double>(x(b, iy, ix, ci)) * w(ky, kx, ci, co);
                            }
                        }
                    }
                    out(b, y, x0, co) = static_cast<T>(acc);
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

inline constexpr double kFdStep = 1e-5;

/** @brief Agreement metric for gradient checks: relative error when either
 *         side is appreciable, absolute error otherwise. */
inline double grad_disagreement(double analytic, double numeric) {
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    if (scale > 1e-6) return std::abs(analytic - numeric) / scale;
    return std::abs(analytic - numeric) < 1e-8 ? 0.0 : std::abs(analytic - numeric);
}

/** @brief Central-difference gradient of `loss` with respect to every element
 *         of `param`, compared against `analytic`; returns the worst
 *         disagreement. `loss` must re-evaluate the full objective. */
template <typename T>
double fd_check(rdcount::Tensor<T>& param, const rdcount::Tensor<T>& analytic,
                const std::function<double()>& loss, double h = kFdStep) {
    double worst = 0.0;
    T* p = param.data();
    for (std::size_t i = 0; i < param.size(); ++i) {
        const T saved = p[i];
        p[i] = static_cast<T>(saved + h);
        const double up = loss();
        p[i] = static_cast<T>(saved - h);
        const double down = loss();
        p[i] = saved;
        const double numeric = (up - down) / (2.0 * h);
        worst = std::max(worst, grad_disagreement(analytic.data()[i], numeric));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Window frequency-response measurement
// ---------------------------------------------------------------------------

/** @brief Squared-magnitude frequency response |W(m/n_pad)|^2, normalized to
 *         the zero-frequency value, via a direct DFT of the taper. */
inline std::vector<double> window_response(const std::vector<double>& w, int n_pad) {
    const double two_pi = 2.0 * std::numbers::pi;
    std::vector<double> mag2(static_cast<std::size_t>(n_pad / 2 + 1));
    for (int m = 0; m <= n_pad / 2; ++m) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t i = 0; i < w.size(); ++i) {
            acc += w[i] * std::polar(1.0, -two_pi * static_cast<double>(m) *
                                              static_cast<double>(i) / n_pad);
        }
        mag2[static_cast<std::size_t>(m)] = std::norm(acc);
    }
    const double peak = mag2[0];
    for (double& v : mag2) v /= peak;
    return mag2;
}

struct LobeMetrics {
    double first_sidelobe_db = 0.0; ///< first local max beyond the first null
    double max_sidelobe_db = 0.0;   ///< global max beyond the first null
    double width_3db_bins = 0.0;    ///< full width at half power, in DFT bins
};

/** @brief Mainlobe/sidelobe metrics of a normalized response. */
inline LobeMetrics lobe_metrics(const std::vector<double>& mag2) {
    LobeMetrics m;
    // -3 dB crossing with linear interpolation between samples.
    std::size_t i = 1;
    while (i < mag2.size() && mag2[i] > 0.5) ++i;
    const double frac = (mag2[i - 1] - 0.5) / (mag2[i - 1] - mag2[i]);
    m.width_3db_bins = 2.0 * (static_cast<double>(i - 1) + frac);
    // First null: first local minimum.
    std::size_t null_at = 1;
    while (null_at + 1 < mag2.size() && mag2[null_at + 1] < mag2[null_at]) ++null_at;
    // First sidelobe: the local maximum right after it.
    std::size_t lobe = null_at;
    while (lobe + 1 < mag2.size() && mag2[lobe + 1] > mag2[lobe]) ++lobe;
    m.first_sidelobe_db = 10.0 * std::log10(mag2[lobe]);
    double worst = 0.0;
    for (std::size_t j = null_at; j < mag2.size(); ++j) worst = std::max(worst, mag2[j]);
    m.max_sidelobe_db = 10.0 * std::log10(worst);
    return m;
}

} // namespace rdtest
