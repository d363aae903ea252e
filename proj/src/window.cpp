#include "rdcount/window.hpp"

#include "rdcount/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rdcount {

namespace {

constexpr double kPi = std::numbers::pi;

/** Chebyshev polynomial T_n(x) extended to |x| > 1 via cosh. */
double cheb_poly(int n, double x) {
    if (x > 1.0) return std::cosh(n * std::acosh(x));
    if (x < -1.0) {
        const double v = std::cosh(n * std::acosh(-x));
        return (n % 2 == 0) ? v : -v;
    }
    return std::cos(n * std::acos(x));
}

/** Mirror the first half onto the second so symmetry is exact bitwise. */
void mirror(std::vector<double>& w) {
    const std::size_t n = w.size();
    for (std::size_t i = 0; i < n / 2; ++i) {
        w[n - 1 - i] = w[i];
    }
}

void peak_normalize(std::vector<double>& w) {
    const double peak = *std::max_element(w.begin(), w.end());
    if (peak > 0) {
        for (double& v : w) v /= peak;
    }
}

std::vector<double> hann(int length) {
    std::vector<double> w(static_cast<std::size_t>(length));
    for (int i = 0; i <= (length - 1) / 2; ++i) {
        w[static_cast<std::size_t>(i)] =
            0.5 * (1.0 - std::cos(2.0 * kPi * i / (length - 1)));
    }
    mirror(w);
    peak_normalize(w);
    return w;
}

/** Dolph-Chebyshev taper: equiripple sidelobes attenuation_db below the
 *  mainlobe. Frequency-domain samples are Chebyshev-polynomial values; the
 *  time-domain taper is their (direct, O(L^2)) inverse transform, with the
 *  even-length case carrying the usual half-sample phase shift. */
std::vector<double> chebyshev(int length, double attenuation_db) {
    const int order = length - 1;
    const double ripple = std::pow(10.0, attenuation_db / 20.0);
    const double beta = std::cosh(std::acosh(ripple) / order);

    std::vector<double> p(static_cast<std::size_t>(length));
    for (int k = 0; k < length; ++k) {
        p[static_cast<std::size_t>(k)] = cheb_poly(order, beta * std::cos(kPi * k / length));
    }

    std::vector<double> w(static_cast<std::size_t>(length), 0.0);
    if (length % 2 == 1) {
        const int half = (length + 1) / 2;
        for (int i = 0; i < half; ++i) {
            double acc = 0.0;
            for (int k = 0; k < length; ++k) {
                acc += p[static_cast<std::size_t>(k)] * std::cos(2.0 * kPi * k * i / length);
            }
            // index (half-1) is the peak; lay out symmetric halves around it
            w[static_cast<std::size_t>(half - 1 + i)] = acc;
        }
        for (int i = 0; i < half - 1; ++i) {
            w[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(length - 1 - i)];
        }
    } else {
        const int half = length / 2;
        for (int i = 0; i < half; ++i) {
            double acc = 0.0;
            for (int k = 0; k < length; ++k) {
                acc += p[static_cast<std::size_t>(k)] *
                       std::cos(kPi * k * (2.0 * i + 1.0) / length);
            }
            w[static_cast<std::size_t>(half + i)] = acc;
        }
        for (int i = 0; i < half; ++i) {
            w[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(length - 1 - i)];
        }
    }
    peak_normalize(w);
    return w;
}

} // namespace

std::string WindowSpec::name() const {
    switch (kind) {
        case WindowKind::Rectangular: return "rect";
        case WindowKind::Hann: return "hann";
        case WindowKind::DolphChebyshev:
            return "cheb" + std::to_string(static_cast<int>(attenuation_db));
    }
    return "unknown";
}

std::vector<double> make_window_1d(const WindowSpec& spec, int length) {
    if (length < 2) {
        throw DomainError("make_window_1d: length must be >= 2, got " + std::to_string(length));
    }
    switch (spec.kind) {
        case WindowKind::Rectangular:
            return std::vector<double>(static_cast<std::size_t>(length), 1.0);
        case WindowKind::Hann:
            return hann(length);
        case WindowKind::DolphChebyshev:
            if (!(spec.attenuation_db > 0) || !std::isfinite(spec.attenuation_db)) {
                throw DomainError("make_window_1d: Chebyshev attenuation_db must be finite and > 0");
            }
            return chebyshev(length, spec.attenuation_db);
    }
    throw DomainError("make_window_1d: unknown window kind");
}

} // namespace rdcount
