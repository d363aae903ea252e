#pragma once

#include "rdcount/digest.hpp"
#include "rdcount/mat.hpp"
#include "rdcount/ofdm.hpp"
#include "rdcount/random_source.hpp"

#include <vector>

namespace rdcount {

/// Two-way propagation speed reference, m/s.
inline constexpr double kSpeedOfLight = 299792458.0;

/** @brief One point scatterer: round-trip delay, Doppler shift, echo
 *         amplitude, and absorbed phase. */
struct Target {
    double delay = 0.0;     ///< round-trip delay in s, >= 0
    double doppler = 0.0;   ///< Doppler shift in Hz (signed)
    double amplitude = 0.0; ///< dimensionless echo amplitude, >= 0
    double phase = 0.0;     ///< radians in [0, 2*pi)
};

/** @brief A drawn scene: targets plus calibrated complex-noise variance. */
struct SceneSpec {
    std::vector<Target> targets;
    double noise_var = 0.0; ///< per-element complex AWGN variance
    double snr_db = 0.0;    ///< requested echo-to-noise ratio (bookkeeping)
};

/** @brief Random-scene generation intervals (validated against the map crop
 *         so every drawn target lands inside it). */
struct SceneGenConfig {
    int k_min = 1;
    int k_max = 12;
    double d_min = 10.0;    ///< meters
    double d_max = 240.0;   ///< meters
    double v_max = 0.0;     ///< m/s; 0 requests the largest crop-safe value
    double d_ref = 0.0;     ///< meters; 0 requests (d_min + d_max) / 2
    double snr_lo = -30.0;  ///< dB
    double snr_hi = 9.0;    ///< dB

    /** @brief Reference range actually used (default: interval midpoint). */
    [[nodiscard]] double d_ref_effective() const {
        return d_ref > 0 ? d_ref : 0.5 * (d_min + d_max);
    }

    /** @brief Velocity bound actually used (default: crop-filling bound). */
    [[nodiscard]] double v_max_effective(const OfdmConfig& cfg) const;

    /** @brief Throws ConfigError when intervals exceed the crop capacity or
     *         are internally inconsistent. */
    void validate(const OfdmConfig& cfg) const;

    void update_digest(Fnv1a& d) const {
        d.update_value(k_min);
        d.update_value(k_max);
        d.update_value(d_min);
        d.update_value(d_max);
        d.update_value(v_max);
        d.update_value(d_ref);
        d.update_value(snr_lo);
        d.update_value(snr_hi);
    }

    bool operator==(const SceneGenConfig&) const = default;
};

/** @brief Normalized received frame: complex n_use x m_symbols matrix with
 *         entry (k, l) = sum_h b_h e^{+j2pi l T_O f_D,h} e^{-j2pi k tau_h df}
 *         e^{j phi_h} + z_{k,l}. */
struct NormalizedFrame {
    ComplexMat data;
};

/** @brief Fractional range bin of a delay: delay * delta_f * n_fft. */
inline double range_bin(const OfdmConfig& cfg, double delay) {
    return delay * cfg.delta_f * cfg.n_fft;
}

/** @brief Signed fractional Doppler bin of a shift: doppler * t_o * m_per. */
inline double doppler_bin(const OfdmConfig& cfg, double doppler) {
    return doppler * cfg.t_o() * cfg.m_per;
}

/** @brief Round-trip delay of a monostatic target at distance d. */
inline double delay_of_distance(double d) { return 2.0 * d / kSpeedOfLight; }

/** @brief Two-way Doppler shift of a monostatic target at radial speed v. */
inline double doppler_of_velocity(double v, double f_c) {
    return 2.0 * v * f_c / kSpeedOfLight;
}

/** @brief Noise variance so the echo-to-noise ratio equals snr_db:
 *         mean_h(amplitude_h^2) * 10^(-snr_db/10).
 *  @throws DomainError on an empty target list. */
double calibrate_noise(const std::vector<Target>& targets, double snr_db);

/** @brief Draw a random scene. Draw order is pinned: K, then per target
 *         (distance, velocity, phase), then the SNR. */
SceneSpec sample_scene(const OfdmConfig& cfg, const SceneGenConfig& gen, RandomSource& rng);

/** @brief Synthesize the normalized frame for a scene, adding circularly
 *         symmetric complex AWGN of variance scene.noise_var (row-major
 *         element order; no draws when noise_var == 0). */
NormalizedFrame make_frame(const OfdmConfig& cfg, const SceneSpec& scene, RandomSource& rng);

/** @brief Order-sensitive digest of a scene's numeric content. */
std::uint64_t scene_digest(const SceneSpec& scene);

} // namespace rdcount
