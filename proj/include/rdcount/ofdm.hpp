#pragma once

#include "rdcount/digest.hpp"
#include "rdcount/errors.hpp"

#include <string>

namespace rdcount {

/** @brief Waveform and range-Doppler-map geometry constants.
 *
 *  Row axis: n_fft-point transform over subcarriers (range); column axis:
 *  m_per-point transform over symbols (Doppler). The OFDM symbol duration
 *  t_o is always derived from delta_f and t_cp, never stored, so it can
 *  never go stale.
 */
struct OfdmConfig {
    int n_fft = 4096;        ///< transform length over subcarriers (range axis)
    int n_use = 1284;        ///< active subcarriers (frame rows), <= n_fft
    int m_symbols = 64;      ///< OFDM symbols per frame (frame columns)
    int m_per = 256;         ///< transform length over symbols (Doppler axis), >= m_symbols
    double delta_f = 30e3;   ///< subcarrier spacing in Hz
    double f_c = 28e9;       ///< carrier frequency in Hz
    double t_cp = (1.0 / 30e3) / 8.0; ///< cyclic-prefix duration in s
    int crop_rows = 200;     ///< rows kept from the range axis (near ranges first)
    int crop_cols = 200;     ///< columns kept from the Doppler axis (centered on zero)

    /** @brief Total OFDM symbol duration: 1/delta_f + t_cp. */
    [[nodiscard]] double t_o() const { return 1.0 / delta_f + t_cp; }

    /** @brief Throws ConfigError if any invariant is violated. */
    void validate() const {
        auto fail = [](const std::string& msg) { throw ConfigError("ofdm: " + msg); };
        if (n_fft < 1 || n_use < 1 || m_symbols < 1 || m_per < 1 ||
            crop_rows < 1 || crop_cols < 1) {
            fail("all counts must be >= 1");
        }
        if (n_use > n_fft) fail("n_use must be <= n_fft");
        if (m_symbols > m_per) fail("m_symbols must be <= m_per");
        if (crop_rows > n_fft) fail("crop_rows must be <= n_fft");
        if (crop_cols > m_per) fail("crop_cols must be <= m_per");
        if (!(delta_f > 0)) fail("delta_f must be > 0");
        if (!(f_c > 0)) fail("f_c must be > 0");
        if (!(t_cp >= 0)) fail("t_cp must be >= 0");
    }

    void update_digest(Fnv1a& d) const {
        d.update_value(n_fft);
        d.update_value(n_use);
        d.update_value(m_symbols);
        d.update_value(m_per);
        d.update_value(delta_f);
        d.update_value(f_c);
        d.update_value(t_cp);
        d.update_value(crop_rows);
        d.update_value(crop_cols);
    }

    bool operator==(const OfdmConfig&) const = default;
};

} // namespace rdcount
