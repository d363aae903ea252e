#include "rdcount/scene.hpp"

#include "rdcount/errors.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

namespace rdcount {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double SceneGenConfig::v_max_effective(const OfdmConfig& cfg) const {
    if (v_max > 0) return v_max;
    // Largest speed whose Doppler bin magnitude stays within the centered
    // crop: |doppler| * t_o * m_per <= (crop_cols - 1) / 2.
    const double doppler_cap = ((cfg.crop_cols - 1) / 2.0) / (cfg.t_o() * cfg.m_per);
    return doppler_cap * kSpeedOfLight / (2.0 * cfg.f_c);
}

void SceneGenConfig::validate(const OfdmConfig& cfg) const {
    auto fail = [](const std::string& msg) { throw ConfigError("gen: " + msg); };
    if (k_min < 1) fail("k_min must be >= 1");
    if (k_max < k_min) fail("k_max must be >= k_min");
    if (!(d_min > 0)) fail("d_min must be > 0");
    if (!(d_max >= d_min)) fail("d_max must be >= d_min");
    if (!(v_max >= 0)) fail("v_max must be >= 0");
    if (!(snr_hi >= snr_lo)) fail("snr_hi must be >= snr_lo");
    const double ref = d_ref_effective();
    if (!(ref >= d_min && ref <= d_max)) fail("d_ref must lie in [d_min, d_max]");

    // Crop capacity: the farthest range and fastest Doppler must map inside it.
    const double max_bin = range_bin(cfg, delay_of_distance(d_max));
    if (max_bin > cfg.crop_rows - 1) {
        fail("d_max = " + std::to_string(d_max) + " m maps to range bin " +
             std::to_string(max_bin) + " past crop_rows - 1 = " +
             std::to_string(cfg.crop_rows - 1));
    }
    const double v_eff = v_max_effective(cfg);
    const double max_dop_bin = std::abs(doppler_bin(cfg, doppler_of_velocity(v_eff, cfg.f_c)));
    if (max_dop_bin > (cfg.crop_cols - 1) / 2.0 * (1.0 + 1e-12)) {
        fail("v_max = " + std::to_string(v_eff) + " m/s maps to Doppler bin " +
             std::to_string(max_dop_bin) + " past the half-crop bound " +
             std::to_string((cfg.crop_cols - 1) / 2.0));
    }
}

double calibrate_noise(const std::vector<Target>& targets, double snr_db) {
    if (targets.empty()) {
        throw DomainError("calibrate_noise: empty target list");
    }
    double mean_power = 0.0;
    for (const Target& t : targets) {
        mean_power += t.amplitude * t.amplitude;
    }
    mean_power /= static_cast<double>(targets.size());
    return mean_power * std::pow(10.0, -snr_db / 10.0);
}

SceneSpec sample_scene(const OfdmConfig& cfg, const SceneGenConfig& gen, RandomSource& rng) {
    gen.validate(cfg);
    const double d_ref = gen.d_ref_effective();
    const double v_cap = gen.v_max_effective(cfg);

    SceneSpec scene;
    const int k = gen.k_min + static_cast<int>(rng.bounded(
                      static_cast<std::uint64_t>(gen.k_max - gen.k_min) + 1));
    scene.targets.reserve(static_cast<std::size_t>(k));
    for (int h = 0; h < k; ++h) {
        const double d = rng.uniform(gen.d_min, gen.d_max);
        const double v = rng.uniform(-v_cap, v_cap);
        const double phase = rng.uniform(0.0, kTwoPi);
        Target t;
        t.delay = delay_of_distance(d);
        t.doppler = doppler_of_velocity(v, cfg.f_c);
        t.amplitude = (d_ref / d) * (d_ref / d);
        t.phase = phase;
        scene.targets.push_back(t);
    }
    scene.snr_db = rng.uniform(gen.snr_lo, gen.snr_hi);
    scene.noise_var = calibrate_noise(scene.targets, scene.snr_db);
    return scene;
}

NormalizedFrame make_frame(const OfdmConfig& cfg, const SceneSpec& scene, RandomSource& rng) {
    cfg.validate();
    if (!(scene.noise_var >= 0)) {
        throw DomainError("make_frame: noise_var must be >= 0");
    }
    const int n_use = cfg.n_use;
    const int m_sym = cfg.m_symbols;
    const double t_o = cfg.t_o();

    NormalizedFrame frame{ComplexMat(n_use, m_sym)};
    std::vector<std::complex<double>> row_phasor(static_cast<std::size_t>(n_use));
    std::vector<std::complex<double>> col_phasor(static_cast<std::size_t>(m_sym));

    for (const Target& t : scene.targets) {
        if (t.delay < 0 || t.amplitude < 0) {
            throw DomainError("make_frame: target with negative delay or amplitude");
        }
        // Separable contribution: (amp * e^{j(phi - 2pi k tau df)}) * e^{+j2pi l T_O f_D}.
        for (int k = 0; k < n_use; ++k) {
            row_phasor[static_cast<std::size_t>(k)] =
                std::polar(t.amplitude, t.phase - kTwoPi * k * t.delay * cfg.delta_f);
        }
        for (int l = 0; l < m_sym; ++l) {
            col_phasor[static_cast<std::size_t>(l)] =
                std::polar(1.0, kTwoPi * l * t_o * t.doppler);
        }
        for (int k = 0; k < n_use; ++k) {
            const std::complex<double> rk = row_phasor[static_cast<std::size_t>(k)];
            std::complex<double>* out = &frame.data(k, 0);
            for (int l = 0; l < m_sym; ++l) {
                out[l] += rk * col_phasor[static_cast<std::size_t>(l)];
            }
        }
    }

    if (scene.noise_var > 0) {
        const double sigma = std::sqrt(scene.noise_var / 2.0);
        std::complex<double>* data = frame.data.data();
        const std::size_t n = frame.data.size();
        for (std::size_t i = 0; i < n; ++i) {
            const auto [a, b] = rng.normal_pair();
            data[i] += std::complex<double>(sigma * a, sigma * b);
        }
    }
    return frame;
}

std::uint64_t scene_digest(const SceneSpec& scene) {
    Fnv1a d;
    const std::uint64_t k = scene.targets.size();
    d.update_value(k);
    for (const Target& t : scene.targets) {
        d.update_value(t.delay);
        d.update_value(t.doppler);
        d.update_value(t.amplitude);
        d.update_value(t.phase);
    }
    d.update_value(scene.noise_var);
    d.update_value(scene.snr_db);
    return d.value();
}

} // namespace rdcount
