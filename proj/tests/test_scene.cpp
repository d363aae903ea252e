#include "doctest.h"

#include "oracle_helpers.hpp"
#include "rdcount/errors.hpp"
#include "rdcount/scene.hpp"

#include <cmath>
#include <complex>
#include <vector>

using namespace rdcount;

namespace {

OfdmConfig tiny_cfg() {
    OfdmConfig cfg;
    cfg.n_fft = 16;
    cfg.n_use = 10;
    cfg.m_symbols = 6;
    cfg.m_per = 8;
    cfg.delta_f = 100e3;
    cfg.f_c = 28e9;
    cfg.t_cp = (1.0 / 100e3) / 8.0;
    cfg.crop_rows = 8;
    cfg.crop_cols = 8;
    return cfg;
}

Target make_target(double amplitude) {
    Target t;
    t.amplitude = amplitude;
    return t;
}

} // namespace

TEST_CASE("calibrate_noise follows mean echo power times 10^(-snr/10)") {
    CHECK(calibrate_noise({make_target(1.0)}, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(calibrate_noise({make_target(1.0)}, -10.0) == doctest::Approx(10.0).epsilon(1e-12));
    // Two amplitudes 1 and 0.5 at +3 dB: mean power 0.625, scaled by 10^-0.3.
    const double expect = 0.625 * std::pow(10.0, -0.3);
    CHECK(calibrate_noise({make_target(1.0), make_target(0.5)}, 3.0) ==
          doctest::Approx(expect).epsilon(1e-12));
    CHECK_THROWS_AS(calibrate_noise({}, 0.0), DomainError);
}

TEST_CASE("sample_scene respects every configured interval") {
    const OfdmConfig cfg = tiny_cfg();
    SceneGenConfig gen;
    gen.k_min = 1;
    gen.k_max = 4;
    gen.d_min = 50.0;
    gen.d_max = 300.0;
    gen.snr_lo = -20.0;
    gen.snr_hi = 5.0;
    const double d_ref = gen.d_ref_effective();
    CHECK(d_ref == doctest::Approx(175.0));
    const double v_cap = gen.v_max_effective(cfg);
    const double dop_cap = doppler_of_velocity(v_cap, cfg.f_c);
    // The crop-filling default speed maps exactly onto the half-crop bound.
    CHECK(std::abs(doppler_bin(cfg, dop_cap)) ==
          doctest::Approx((cfg.crop_cols - 1) / 2.0).epsilon(1e-9));

    RandomSource rng(11);
    for (int i = 0; i < 200; ++i) {
        const SceneSpec scene = sample_scene(cfg, gen, rng);
        const int k = static_cast<int>(scene.targets.size());
        REQUIRE(k >= gen.k_min);
        REQUIRE(k <= gen.k_max);
        REQUIRE(scene.snr_db >= gen.snr_lo);
        REQUIRE(scene.snr_db < gen.snr_hi);
        CHECK(scene.noise_var == calibrate_noise(scene.targets, scene.snr_db));
        for (const Target& t : scene.targets) {
            const double d = t.delay * kSpeedOfLight / 2.0;
            REQUIRE(d >= gen.d_min * (1 - 1e-12));
            REQUIRE(d <= gen.d_max * (1 + 1e-12));
            CHECK(t.amplitude ==
                  doctest::Approx((d_ref / d) * (d_ref / d)).epsilon(1e-12));
            REQUIRE(std::abs(t.doppler) <= dop_cap * (1 + 1e-12));
            REQUIRE(t.phase >= 0.0);
            REQUIRE(t.phase < 2.0 * 3.14159265358979323846 + 1e-12);
        }
    }
}

TEST_CASE("sample_scene draws counts uniformly") {
    const OfdmConfig cfg = tiny_cfg();
    SceneGenConfig gen;
    gen.k_min = 1;
    gen.k_max = 4;
    gen.d_min = 50.0;
    gen.d_max = 300.0;
    RandomSource rng(3);
    const int n = 12000;
    std::vector<int> hist(static_cast<std::size_t>(gen.k_max), 0);
    double d_sum = 0.0;
    int d_count = 0;
    for (int i = 0; i < n; ++i) {
        const SceneSpec scene = sample_scene(cfg, gen, rng);
        hist[scene.targets.size() - 1] += 1;
        for (const Target& t : scene.targets) {
            d_sum += t.delay * kSpeedOfLight / 2.0;
            d_count += 1;
        }
    }
    const double expect = static_cast<double>(n) / gen.k_max;
    double chi2 = 0.0;
    for (int c : hist) {
        const double d = c - expect;
        chi2 += d * d / expect;
    }
    CHECK(chi2 < 16.27); // chi-square 99.9% quantile, 3 degrees of freedom
    // Distances are uniform on [d_min, d_max]: the mean sits at the midpoint.
    const double d_mean = d_sum / d_count;
    const double se = (gen.d_max - gen.d_min) / std::sqrt(12.0 * d_count);
    CHECK(std::abs(d_mean - 175.0) < 5.0 * se);
}

TEST_CASE("scene draws are reproducible from the seed") {
    const OfdmConfig cfg = tiny_cfg();
    SceneGenConfig gen;
    gen.d_min = 50.0;
    gen.d_max = 300.0;
    gen.k_max = 6;
    RandomSource a(42), b(42), c(43);
    const SceneSpec sa = sample_scene(cfg, gen, a);
    const SceneSpec sb = sample_scene(cfg, gen, b);
    const SceneSpec sc = sample_scene(cfg, gen, c);
    CHECK(scene_digest(sa) == scene_digest(sb));
    CHECK(scene_digest(sa) != scene_digest(sc));
}

TEST_CASE("scene generation validates capacity and intervals") {
    const OfdmConfig cfg = tiny_cfg();
    SceneGenConfig gen;
    gen.d_min = 50.0;
    gen.d_max = 300.0;

    SceneGenConfig bad = gen;
    bad.k_min = 0;
    CHECK_THROWS_AS(bad.validate(cfg), ConfigError);

    bad = gen;
    bad.k_max = 0;
    CHECK_THROWS_AS(bad.validate(cfg), ConfigError);

    bad = gen;
    bad.d_max = 10000.0; // range bin far past crop_rows - 1
    CHECK_THROWS_WITH_AS(bad.validate(cfg), doctest::Contains("range bin"), ConfigError);

    bad = gen;
    bad.v_max = 10.0 * gen.v_max_effective(cfg); // Doppler bin past the half crop
    CHECK_THROWS_WITH_AS(bad.validate(cfg), doctest::Contains("Doppler bin"), ConfigError);

    bad = gen;
    bad.d_ref = 1.0; // outside [d_min, d_max]
    CHECK_THROWS_AS(bad.validate(cfg), ConfigError);

    bad = gen;
    bad.snr_lo = 3.0;
    bad.snr_hi = -3.0;
    CHECK_THROWS_AS(bad.validate(cfg), ConfigError);
}

TEST_CASE("make_frame matches the direct per-entry formula, noiseless") {
    const OfdmConfig cfg = tiny_cfg();
    Target t;
    t.delay = delay_of_distance(212.0);
    t.doppler = doppler_of_velocity(14.0, cfg.f_c);
    t.amplitude = 0.8;
    t.phase = 0.3;
    SceneSpec scene;
    scene.targets = {t};
    scene.noise_var = 0.0;

    RandomSource rng(1);
    const NormalizedFrame frame = make_frame(cfg, scene, rng);
    REQUIRE(frame.data.rows() == cfg.n_use);
    REQUIRE(frame.data.cols() == cfg.m_symbols);
    for (int k = 0; k < cfg.n_use; ++k) {
        for (int l = 0; l < cfg.m_symbols; ++l) {
            const std::complex<double> expect = rdtest::direct_frame_entry(cfg, scene.targets, k, l);
            CHECK(std::abs(frame.data(k, l) - expect) < 1e-12);
        }
    }
}

TEST_CASE("make_frame is additive over targets") {
    const OfdmConfig cfg = tiny_cfg();
    Target t1;
    t1.delay = delay_of_distance(100.0);
    t1.doppler = 250.0;
    t1.amplitude = 1.0;
    t1.phase = 1.1;
    Target t2;
    t2.delay = delay_of_distance(333.0);
    t2.doppler = -410.0;
    t2.amplitude = 0.4;
    t2.phase = 5.0;

    RandomSource rng(1);
    const NormalizedFrame both = make_frame(cfg, SceneSpec{{t1, t2}, 0.0, 0.0}, rng);
    const NormalizedFrame a = make_frame(cfg, SceneSpec{{t1}, 0.0, 0.0}, rng);
    const NormalizedFrame b = make_frame(cfg, SceneSpec{{t2}, 0.0, 0.0}, rng);
    for (int k = 0; k < cfg.n_use; ++k) {
        for (int l = 0; l < cfg.m_symbols; ++l) {
            CHECK(std::abs(both.data(k, l) - (a.data(k, l) + b.data(k, l))) < 1e-12);
        }
    }
}

TEST_CASE("frame noise is circular complex Gaussian of the calibrated variance") {
    OfdmConfig cfg = tiny_cfg();
    cfg.n_use = 64;
    cfg.m_symbols = 32;
    cfg.n_fft = 64;
    cfg.m_per = 32;
    cfg.crop_rows = 8;
    cfg.crop_cols = 8;
    SceneSpec scene;
    scene.targets = {};         // noise only
    scene.noise_var = 2.0;

    double re_sum = 0.0, im_sum = 0.0, re2 = 0.0, im2 = 0.0, cross = 0.0;
    int n = 0;
    RandomSource rng(55);
    for (int rep = 0; rep < 20; ++rep) {
        const NormalizedFrame frame = make_frame(cfg, scene, rng);
        for (int k = 0; k < cfg.n_use; ++k) {
            for (int l = 0; l < cfg.m_symbols; ++l) {
                const std::complex<double> z = frame.data(k, l);
                re_sum += z.real();
                im_sum += z.imag();
                re2 += z.real() * z.real();
                im2 += z.imag() * z.imag();
                cross += z.real() * z.imag();
                ++n;
            }
        }
    }
    const double half_var = scene.noise_var / 2.0;
    const double se_mean = std::sqrt(half_var / n);
    const double se_var = half_var * std::sqrt(2.0 / n);
    CHECK(std::abs(re_sum / n) < 5 * se_mean);
    CHECK(std::abs(im_sum / n) < 5 * se_mean);
    CHECK(std::abs(re2 / n - half_var) < 5 * se_var);
    CHECK(std::abs(im2 / n - half_var) < 5 * se_var);
    CHECK(std::abs(cross / n) < 5 * half_var / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("make_frame is deterministic for a fixed rng seed and draws nothing when noiseless") {
    const OfdmConfig cfg = tiny_cfg();
    Target t;
    t.delay = delay_of_distance(150.0);
    t.amplitude = 1.0;
    SceneSpec noisy;
    noisy.targets = {t};
    noisy.noise_var = 0.5;

    RandomSource r1(9), r2(9);
    CHECK(make_frame(cfg, noisy, r1).data == make_frame(cfg, noisy, r2).data);

    // Noiseless synthesis consumes no draws: the rng stays in step.
    SceneSpec clean = noisy;
    clean.noise_var = 0.0;
    RandomSource r3(9), r4(9);
    (void)make_frame(cfg, clean, r3);
    CHECK(r3.next_u64() == r4.next_u64());

    SceneSpec invalid = noisy;
    invalid.noise_var = -1.0;
    RandomSource r5(9);
    CHECK_THROWS_AS(make_frame(cfg, invalid, r5), DomainError);
}

TEST_CASE("scene_digest reflects scene content") {
    Target t;
    t.delay = 1e-6;
    t.amplitude = 1.0;
    SceneSpec a;
    a.targets = {t};
    a.noise_var = 0.1;
    a.snr_db = 3.0;
    SceneSpec b = a;
    CHECK(scene_digest(a) == scene_digest(b));
    b.targets[0].phase = 0.5;
    CHECK(scene_digest(a) != scene_digest(b));
    SceneSpec c = a;
    c.snr_db = 4.0;
    CHECK(scene_digest(a) != scene_digest(c));
}

TEST_CASE("bin mappings follow the geometry") {
    const OfdmConfig cfg = tiny_cfg();
    // range_bin: delay * delta_f * n_fft.
    CHECK(range_bin(cfg, 2.5e-6) == doctest::Approx(2.5e-6 * 100e3 * 16).epsilon(1e-12));
    // doppler_bin: doppler * t_o * m_per with t_o = 1/delta_f + t_cp.
    const double t_o = 1.0 / 100e3 + (1.0 / 100e3) / 8.0;
    CHECK(cfg.t_o() == doctest::Approx(t_o).epsilon(1e-15));
    CHECK(doppler_bin(cfg, 500.0) == doctest::Approx(500.0 * t_o * 8).epsilon(1e-12));
    CHECK(delay_of_distance(150.0) == doctest::Approx(300.0 / kSpeedOfLight).epsilon(1e-15));
    CHECK(doppler_of_velocity(10.0, 28e9) ==
          doctest::Approx(20.0 * 28e9 / kSpeedOfLight).epsilon(1e-15));
}
