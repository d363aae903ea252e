#pragma once

#include "rdcount/digest.hpp"
#include "rdcount/ofdm.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rdcount {

/** @brief Taper families. Rectangular preserves resolution; Hann suppresses
 *         sidelobes; Dolph-Chebyshev gives equiripple sidelobes at a chosen
 *         attenuation. */
enum class WindowKind : std::uint8_t {
    Rectangular = 0,
    Hann = 1,
    DolphChebyshev = 2,
};

/** @brief A window family plus its parameter (only Dolph-Chebyshev has one). */
struct WindowSpec {
    WindowKind kind = WindowKind::Rectangular;
    double attenuation_db = 60.0; ///< Dolph-Chebyshev sidelobe attenuation, > 0

    [[nodiscard]] std::string name() const;
    static WindowSpec rectangular() { return {WindowKind::Rectangular, 0.0}; }
    static WindowSpec hann() { return {WindowKind::Hann, 0.0}; }
    static WindowSpec chebyshev(double attenuation_db = 60.0) {
        return {WindowKind::DolphChebyshev, attenuation_db};
    }

    void update_digest(Fnv1a& d) const {
        d.update_value(kind);
        d.update_value(attenuation_db);
    }

    bool operator==(const WindowSpec&) const = default;
};

/** @brief 1D taper of the requested length, peak-normalized to 1 and exactly
 *         symmetric (w[i] == w[L-1-i] bitwise, mirrored halves).
 *  @throws DomainError for length < 2 or invalid parameters. */
std::vector<double> make_window_1d(const WindowSpec& spec, int length);

/** @brief Separable 2D window: (W)_{k,l} = row_weights[k] * col_weights[l]. */
struct Window2d {
    std::vector<double> row_weights; ///< length n_use
    std::vector<double> col_weights; ///< length m_symbols

    /** @brief Build the same taper family on both axes of a frame. */
    static Window2d separable(const WindowSpec& spec, const OfdmConfig& cfg) {
        return Window2d{make_window_1d(spec, cfg.n_use), make_window_1d(spec, cfg.m_symbols)};
    }
};

} // namespace rdcount
