#pragma once

#include "rdcount/mat.hpp"
#include "rdcount/ofdm.hpp"
#include "rdcount/scene.hpp"
#include "rdcount/window.hpp"

#include <cstdint>
#include <vector>

// Forward declarations so fftw3.h stays private to the implementation.
struct fftw_plan_s;

namespace rdcount {

/** @brief Full range-Doppler periodogram: n_fft x m_per, entry (n, m) =
 *         (1/(n_fft*m_symbols)) |sum_{k,l} F_{k,l} W_{k,l}
 *         e^{-j2pi l m / m_per} e^{+j2pi k n / n_fft}|^2. */
struct RdMap {
    RealMat values;
    OfdmConfig cfg;
};

/** @brief Input scaling applied to cropped maps before the network. */
enum class Scale : std::uint8_t {
    Linear = 0,
    Decibel = 1,
};

/** @brief Network input: 1 or 2 aligned crop channels plus their scale.
 *         Channel order is fixed by the data layer: channel 0 carries the
 *         resolution window (Rectangular), channel 1 the sidelobe window
 *         (Hann). */
struct RdInput {
    std::vector<RealMat> channels;
    Scale scale = Scale::Decibel;
};

/** @brief Relative floor applied under Decibel scaling: values below
 *         1e-12 * (crop max) clamp to that floor (-120 dB relative). */
inline constexpr double kDbFloorRel = 1e-12;

/** @brief FFT-based periodogram engine.
 *
 *  The +j kernel over the subcarrier axis is an inverse transform and the
 *  -j kernel over the symbol axis a forward transform; plans are created
 *  once per geometry and executed on per-call buffers (new-array execute),
 *  so a single engine is safe for concurrent compute() calls.
 */
class PeriodogramEngine {
public:
    explicit PeriodogramEngine(const OfdmConfig& cfg);
    ~PeriodogramEngine();

    PeriodogramEngine(const PeriodogramEngine&) = delete;
    PeriodogramEngine& operator=(const PeriodogramEngine&) = delete;
    PeriodogramEngine(PeriodogramEngine&& other) noexcept;
    PeriodogramEngine& operator=(PeriodogramEngine&& other) noexcept;

    /** @brief Windowed periodogram of a frame.
     *  @throws DomainError if frame or window dims mismatch the geometry. */
    [[nodiscard]] RdMap compute(const NormalizedFrame& frame, const Window2d& window) const;

    [[nodiscard]] const OfdmConfig& cfg() const { return cfg_; }

private:
    OfdmConfig cfg_;
    fftw_plan_s* range_plan_ = nullptr;   ///< +j, along subcarriers, length n_fft
    fftw_plan_s* doppler_plan_ = nullptr; ///< -j, along symbols, length m_per
};

/** @brief Crop to crop_rows x crop_cols: rows are range bins 0..crop_rows-1;
 *         columns are Doppler bins in signed order, zero Doppler at column
 *         floor(crop_cols/2). */
RealMat crop_map(const RdMap& map, const OfdmConfig& cfg);

/** @brief Column index of signed Doppler bin s inside the centered crop. */
inline int crop_col_of_signed_bin(const OfdmConfig& cfg, int s) {
    return s + cfg.crop_cols / 2;
}

/** @brief Stack 1 or 2 equal-shaped crops into a network input, optionally
 *         converting to decibels with a per-crop relative floor.
 *  @throws DomainError on shape mismatch or empty input. */
RdInput to_input(const std::vector<RealMat>& crops, Scale scale);

} // namespace rdcount
