#include "doctest.h"

#include "oracle_helpers.hpp"
#include "rdcount/dataset.hpp"
#include "rdcount/errors.hpp"
#include "rdcount/evaluate.hpp"
#include "rdcount/trainer.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

using namespace rdcount;

namespace {

OfdmConfig tiny_cfg() {
    OfdmConfig cfg;
    cfg.n_fft = 64;
    cfg.n_use = 32;
    cfg.m_symbols = 8;
    cfg.m_per = 16;
    cfg.delta_f = 500e3;
    cfg.f_c = 28e9;
    cfg.t_cp = (1.0 / 500e3) / 8.0;
    cfg.crop_rows = 12;
    cfg.crop_cols = 12;
    return cfg;
}

SceneGenConfig tiny_gen() {
    SceneGenConfig gen;
    gen.k_min = 1;
    gen.k_max = 3;
    gen.d_min = 10.0;
    gen.d_max = 40.0;
    gen.snr_lo = -5.0;
    gen.snr_hi = 9.0;
    return gen;
}

DatasetBuildSpec tiny_build(int n, std::uint64_t seed, SeedStream stream) {
    DatasetBuildSpec spec;
    spec.ofdm = tiny_cfg();
    spec.gen = tiny_gen();
    spec.windows = {WindowSpec::rectangular(), WindowSpec::hann()};
    spec.scale = Scale::Decibel;
    spec.n_samples = n;
    spec.seed = seed;
    spec.stream = stream;
    return spec;
}

void flip_byte(const std::filesystem::path& p, std::int64_t offset_from_start) {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    REQUIRE(f.good());
    f.seekg(offset_from_start);
    char c = 0;
    f.read(&c, 1);
    c = static_cast<char>(c ^ 0x5A);
    f.seekp(offset_from_start);
    f.write(&c, 1);
}

} // namespace

TEST_CASE("build_dataset emits labelled, bounded, finite samples") {
    const DatasetBuildSpec spec = tiny_build(40, 11, SeedStream::TrainData);
    spec.validate();
    const Dataset ds = build_dataset(spec);

    CHECK(ds.rows == 12);
    CHECK(ds.cols == 12);
    CHECK(ds.n_channels == 2);
    CHECK(ds.scale == Scale::Decibel);
    CHECK(ds.k_max == 3);
    CHECK(ds.seed == 11);
    CHECK(ds.stream == SeedStream::TrainData);
    CHECK(ds.config_digest == spec.digest());
    REQUIRE(ds.windows.size() == 2);
    CHECK(ds.windows[0].kind == WindowKind::Rectangular);
    CHECK(ds.windows[1].kind == WindowKind::Hann);
    REQUIRE(ds.n_samples() == 40);
    REQUIRE(ds.labels.size() == 40);
    REQUIRE(ds.snr_db.size() == 40);
    REQUIRE(ds.scene_digests.size() == 40);
    REQUIRE(ds.data.size() == 40 * ds.sample_stride());

    for (int i = 0; i < 40; ++i) {
        CHECK(ds.labels[static_cast<std::size_t>(i)] >= 1);
        CHECK(ds.labels[static_cast<std::size_t>(i)] <= 3);
        CHECK(ds.snr_db[static_cast<std::size_t>(i)] >= -5.0f);
        CHECK(ds.snr_db[static_cast<std::size_t>(i)] < 9.0f);
    }
    for (float v : ds.data) {
        REQUIRE(std::isfinite(v)); // the per-crop floor keeps log10 away from zero
    }
}

TEST_CASE("each sample is one frame viewed through every window") {
    const DatasetBuildSpec spec = tiny_build(10, 29, SeedStream::ValData);
    const Dataset ds = build_dataset(spec);
    const int probe = 7;

    // Replay the generator pipeline for one sample independently.
    RandomSource rng(derive_seed(spec.seed, spec.stream, static_cast<std::uint64_t>(probe)));
    const SceneSpec scene = sample_scene(spec.ofdm, spec.gen, rng);
    const NormalizedFrame frame = make_frame(spec.ofdm, scene, rng);
    const PeriodogramEngine engine(spec.ofdm);
    std::vector<RealMat> crops;
    for (const WindowSpec& w : spec.windows) {
        const RdMap map = engine.compute(frame, Window2d::separable(w, spec.ofdm));
        crops.push_back(crop_map(map, spec.ofdm));
    }
    const RdInput input = to_input(crops, spec.scale);

    CHECK(ds.labels[probe] == static_cast<int>(scene.targets.size()));
    CHECK(ds.snr_db[probe] == static_cast<float>(scene.snr_db));
    CHECK(ds.scene_digests[probe] == scene_digest(scene));
    const float* plane = ds.sample_ptr(probe);
    for (int ch = 0; ch < 2; ++ch) {
        for (int r = 0; r < ds.rows; ++r) {
            for (int c = 0; c < ds.cols; ++c) {
                const float expect =
                    static_cast<float>(input.channels[static_cast<std::size_t>(ch)](r, c));
                CHECK(plane[(static_cast<std::size_t>(ch) * ds.rows + r) * ds.cols + c] == expect);
            }
        }
    }
}

TEST_CASE("dataset builds are deterministic and stream-separated") {
    const DatasetBuildSpec spec = tiny_build(12, 5, SeedStream::TrainData);
    const Dataset a = build_dataset(spec);
    const Dataset b = build_dataset(spec);
    CHECK(a.data == b.data);
    CHECK(a.labels == b.labels);
    CHECK(a.scene_digests == b.scene_digests);

    DatasetBuildSpec val_spec = spec;
    val_spec.stream = SeedStream::ValData;
    const Dataset v = build_dataset(val_spec);
    CHECK(v.scene_digests != a.scene_digests);
    CHECK(v.config_digest != a.config_digest);
}

TEST_CASE("dataset container round-trips bit-exactly") {
    rdtest::TempDir tmp;
    const auto path = tmp.path() / "train_test.rdds";
    const DatasetBuildSpec spec = tiny_build(9, 2, SeedStream::TrainData);
    const Dataset ds = build_dataset(spec);
    save_dataset(path, ds);

    const Dataset back = load_dataset(path);
    CHECK(back.rows == ds.rows);
    CHECK(back.cols == ds.cols);
    CHECK(back.n_channels == ds.n_channels);
    CHECK(back.scale == ds.scale);
    CHECK(back.k_max == ds.k_max);
    CHECK(back.seed == ds.seed);
    CHECK(back.stream == ds.stream);
    CHECK(back.config_digest == ds.config_digest);
    CHECK(back.windows == ds.windows);
    CHECK(back.labels == ds.labels);
    CHECK(back.snr_db == ds.snr_db);
    CHECK(back.scene_digests == ds.scene_digests);
    CHECK(back.data == ds.data);

    const DatasetHeader hdr = read_dataset_header(path);
    CHECK(hdr.rows == ds.rows);
    CHECK(hdr.cols == ds.cols);
    CHECK(hdr.n_channels == 2);
    CHECK(hdr.n_samples == 9);
    CHECK(hdr.config_digest == ds.config_digest);
    CHECK(hdr.windows == ds.windows);
}

TEST_CASE("dataset loader rejects damaged or missing files") {
    rdtest::TempDir tmp;
    const auto path = tmp.path() / "ds.rdds";
    const Dataset ds = build_dataset(tiny_build(6, 3, SeedStream::TrainData));
    save_dataset(path, ds);

    CHECK_THROWS_AS(load_dataset(tmp.path() / "absent.rdds"), MissingArtifactError);

    const auto size = std::filesystem::file_size(path);
    flip_byte(path, static_cast<std::int64_t>(size / 2));
    CHECK_THROWS_AS(load_dataset(path), FormatError);

    save_dataset(path, ds); // restore
    std::filesystem::resize_file(path, size - 5);
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("truncated"), FormatError);

    // A non-container file is rejected on its magic.
    const auto junk = tmp.path() / "junk.rdds";
    std::ofstream(junk) << "definitely not a dataset";
    CHECK_THROWS_AS(load_dataset(junk), FormatError);
}

TEST_CASE("gather_batch slices samples and channels") {
    const Dataset ds = build_dataset(tiny_build(8, 7, SeedStream::TrainData));
    Tensor<float> x;
    std::vector<int> labels;
    const std::vector<int> pick = {5, 0, 3};

    gather_batch(ds, pick, -1, x, labels);
    CHECK(x.n() == 3);
    CHECK(x.h() == 12);
    CHECK(x.w() == 12);
    CHECK(x.c() == 2);
    REQUIRE(labels.size() == 3);
    for (int b = 0; b < 3; ++b) {
        CHECK(labels[static_cast<std::size_t>(b)] == ds.labels[static_cast<std::size_t>(pick[static_cast<std::size_t>(b)])]);
        const float* sample = ds.sample_ptr(pick[static_cast<std::size_t>(b)]);
        for (int ch = 0; ch < 2; ++ch)
            for (int r = 0; r < 12; ++r)
                for (int c = 0; c < 12; ++c)
                    CHECK(x(b, r, c, ch) ==
                          sample[(static_cast<std::size_t>(ch) * 12 + r) * 12 + c]);
    }

    for (int ch = 0; ch < 2; ++ch) {
        gather_batch(ds, pick, ch, x, labels);
        CHECK(x.c() == 1);
        for (int b = 0; b < 3; ++b) {
            const float* sample = ds.sample_ptr(pick[static_cast<std::size_t>(b)]);
            for (int r = 0; r < 12; ++r)
                for (int c = 0; c < 12; ++c)
                    CHECK(x(b, r, c, 0) ==
                          sample[(static_cast<std::size_t>(ch) * 12 + r) * 12 + c]);
        }
    }
}

namespace {

/** Two-class toy problem the canonical architecture should crack quickly. */
DatasetBuildSpec toy_build(int n, SeedStream stream) {
    DatasetBuildSpec spec;
    spec.ofdm.n_fft = 128;
    spec.ofdm.n_use = 48;
    spec.ofdm.m_symbols = 16;
    spec.ofdm.m_per = 32;
    spec.ofdm.delta_f = 240e3;
    spec.ofdm.f_c = 28e9;
    spec.ofdm.t_cp = (1.0 / 240e3) / 8.0;
    spec.ofdm.crop_rows = 24;
    spec.ofdm.crop_cols = 24;
    spec.gen.k_min = 1;
    spec.gen.k_max = 2;
    spec.gen.d_min = 15.0;
    spec.gen.d_max = 60.0;
    spec.gen.snr_lo = 8.0;
    spec.gen.snr_hi = 12.0;
    spec.windows = {WindowSpec::rectangular(), WindowSpec::hann()};
    spec.n_samples = n;
    spec.seed = 17;
    spec.stream = stream;
    return spec;
}

} // namespace

TEST_CASE("training learns a two-class toy problem deterministically") {
    const Dataset train = build_dataset(toy_build(240, SeedStream::TrainData));
    const Dataset val = build_dataset(toy_build(60, SeedStream::ValData));
    const NetworkSpec spec = NetworkSpec::for_input(24, 24, 2, 2);

    TrainConfig cfg;
    cfg.epochs = 12;
    cfg.batch_size = 20;
    cfg.lr = 1e-3;
    cfg.l2 = 1e-4;
    cfg.seed = 3;
    cfg.channel_select = -1;

    const TrainResult result = train_model(spec, train, val, cfg);
    REQUIRE(result.history.size() == 12);
    for (int i = 0; i < 12; ++i) CHECK(result.history[static_cast<std::size_t>(i)].epoch == i + 1);

    // The optimizer made real progress on the training objective.
    CHECK(result.history.back().train_ce < result.history.front().train_ce);
    const Network<float> net(spec);
    const DatasetMetrics train_metrics =
        evaluate_on_dataset(net, result.final_params, train, -1, cfg.batch_size);
    CHECK(train_metrics.accuracy >= 0.9);

    // best_epoch is the first argmin of val_mse.
    int expect_best = 1;
    for (std::size_t i = 1; i < result.history.size(); ++i) {
        if (result.history[i].val_mse < result.history[static_cast<std::size_t>(expect_best - 1)].val_mse) {
            expect_best = static_cast<int>(i) + 1;
        }
    }
    CHECK(result.best_epoch == expect_best);

    // Rerun: bit-identical parameters and metrics (wall-clock time aside).
    const TrainResult again = train_model(spec, train, val, cfg);
    CHECK(again.final_params.content_digest() == result.final_params.content_digest());
    CHECK(again.best_params.content_digest() == result.best_params.content_digest());
    REQUIRE(again.history.size() == result.history.size());
    for (std::size_t i = 0; i < result.history.size(); ++i) {
        CHECK(again.history[i].train_ce == result.history[i].train_ce);
        CHECK(again.history[i].val_ce == result.history[i].val_ce);
        CHECK(again.history[i].val_mse == result.history[i].val_mse);
    }
}

TEST_CASE("a zero learning rate leaves the initialization untouched") {
    const Dataset train = build_dataset(tiny_build(20, 21, SeedStream::TrainData));
    const Dataset val = build_dataset(tiny_build(8, 21, SeedStream::ValData));
    const NetworkSpec spec = NetworkSpec::for_input(12, 12, 2, 3);

    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 10;
    cfg.lr = 0.0;
    cfg.l2 = 0.0;
    cfg.seed = 9;

    const TrainResult result = train_model(spec, train, val, cfg);
    const Network<float> net(spec);
    RandomSource init_rng(derive_seed(cfg.seed, SeedStream::Init,
                                      static_cast<std::uint64_t>(cfg.channel_select + 1)));
    ModelParams<float> fresh = net.init_params(init_rng);
    // Learnable tensors are bit-identical; only BN running stats moved.
    auto got = result.final_params.param_refs();
    auto want = fresh.param_refs();
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(*got[i].tensor == *want[i].tensor);
    }
    CHECK(result.final_params.content_digest() != fresh.content_digest());
}

TEST_CASE("training validates channel selection, geometry, and label capacity") {
    const Dataset train = build_dataset(tiny_build(20, 31, SeedStream::TrainData));
    const Dataset val = build_dataset(tiny_build(8, 31, SeedStream::ValData));
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 10;

    // Single-channel training needs a single-channel network.
    TrainConfig one = cfg;
    one.channel_select = 0;
    CHECK_THROWS_WITH_AS(
        train_model(NetworkSpec::for_input(12, 12, 2, 3), train, val, one),
        doctest::Contains("does not match dataset"), ConfigError);

    // Geometry mismatch.
    CHECK_THROWS_WITH_AS(
        train_model(NetworkSpec::for_input(24, 24, 2, 3), train, val, cfg),
        doctest::Contains("does not match dataset"), ConfigError);

    // Too few classes for the dataset's label ceiling (k_max = 3 here).
    CHECK_THROWS_WITH_AS(
        train_model(NetworkSpec::for_input(12, 12, 2, 2), train, val, cfg),
        doctest::Contains("exceeds class count"), ConfigError);

    TrainConfig bad = cfg;
    bad.epochs = 0;
    CHECK_THROWS_AS(train_model(NetworkSpec::for_input(12, 12, 2, 3), train, val, bad),
                    ConfigError);
    bad = cfg;
    bad.channel_select = -2;
    CHECK_THROWS_AS(train_model(NetworkSpec::for_input(12, 12, 2, 3), train, val, bad),
                    ConfigError);
}

TEST_CASE("dataset metrics are exact for an uninformative head") {
    const Dataset ds = build_dataset(tiny_build(25, 41, SeedStream::ValData));
    const NetworkSpec spec = NetworkSpec::for_input(12, 12, 2, 3);
    const Network<float> net(spec);
    RandomSource rng(1);
    ModelParams<float> params = net.init_params(rng);
    params.fc_w.zero();
    params.fc_b.zero(); // uniform probabilities; ties predict count 1

    const DatasetMetrics m = evaluate_on_dataset(net, params, ds, -1, 7);
    double acc = 0.0, mse = 0.0;
    for (int label : ds.labels) {
        acc += label == 1;
        mse += (1.0 - label) * (1.0 - label);
    }
    CHECK(m.accuracy == doctest::Approx(acc / 25.0).epsilon(1e-12));
    CHECK(m.mse == doctest::Approx(mse / 25.0).epsilon(1e-12));
    CHECK(m.ce == doctest::Approx(std::log(3.0)).epsilon(1e-6));
}

TEST_CASE("density sweeps pin the count and score predictors on shared trials") {
    EvalGridSpec grid;
    grid.ofdm = tiny_cfg();
    grid.gen = tiny_gen();
    grid.gen.k_max = 4;
    grid.windows = {WindowSpec::rectangular(), WindowSpec::hann()};
    grid.axis = SweepAxis::Density;
    grid.k_values = {1, 2, 3, 4};
    grid.density_snr_db = -3.0;
    grid.n_trials = 60;
    grid.batch = 16;
    grid.seed = 77;
    grid.h_t = 4;
    grid.validate();

    TruthPredictor truth1, truth2;
    ConstantPredictor const2(2);
    const EvalResult res = evaluate_models(grid, {&truth1, &const2, &truth2});

    CHECK(res.axis == SweepAxis::Density);
    CHECK(axis_name(res.axis) == "targets");
    CHECK(res.axis_values == std::vector<double>{1.0, 2.0, 3.0, 4.0});
    REQUIRE(res.model_names.size() == 3);
    CHECK(res.model_names[1] == "constant2");
    REQUIRE(res.cells.size() == 4);
    for (int c = 0; c < 4; ++c) {
        const int k = grid.k_values[static_cast<std::size_t>(c)];
        REQUIRE(res.cells[static_cast<std::size_t>(c)].size() == 3);
        const EvalCell& truth_cell = res.cells[static_cast<std::size_t>(c)][0];
        const EvalCell& const_cell = res.cells[static_cast<std::size_t>(c)][1];
        const EvalCell& truth_cell2 = res.cells[static_cast<std::size_t>(c)][2];
        CHECK(truth_cell.mse == 0.0);
        CHECK(truth_cell.bias == 0.0);
        CHECK(truth_cell.n == 60);
        // Every trial in this condition has exactly k targets.
        CHECK(const_cell.mse == static_cast<double>((2 - k) * (2 - k)));
        CHECK(const_cell.bias == static_cast<double>(2 - k));
        // Identical predictors on identical trials agree bit for bit.
        CHECK(truth_cell2.mse == truth_cell.mse);
        CHECK(truth_cell2.bias == truth_cell.bias);
    }

    const EvalResult rerun = evaluate_models(grid, {&truth1, &const2, &truth2});
    for (std::size_t c = 0; c < res.cells.size(); ++c)
        for (std::size_t m = 0; m < res.cells[c].size(); ++m) {
            CHECK(rerun.cells[c][m].mse == res.cells[c][m].mse);
            CHECK(rerun.cells[c][m].bias == res.cells[c][m].bias);
        }
}

TEST_CASE("snr sweeps draw counts from the generator range") {
    EvalGridSpec grid;
    grid.ofdm = tiny_cfg();
    grid.gen = tiny_gen();
    grid.gen.k_min = 1;
    grid.gen.k_max = 4;
    grid.windows = {WindowSpec::rectangular(), WindowSpec::hann()};
    grid.axis = SweepAxis::Snr;
    grid.snr_values = {-10.0, 5.0};
    grid.n_trials = 500;
    grid.batch = 50;
    grid.seed = 13;
    grid.h_t = 4;
    grid.validate();

    ConstantPredictor const2(2);
    const EvalResult res = evaluate_models(grid, {&const2});
    CHECK(axis_name(res.axis) == "snr");
    REQUIRE(res.cells.size() == 2);
    for (const auto& row : res.cells) {
        // K uniform on {1..4}: E[(2-K)^2] = (1+0+1+4)/4 = 1.5.
        CHECK(std::abs(row[0].mse - 1.5) < 0.25);
        CHECK(row[0].n == 500);
    }
}

TEST_CASE("out-of-range predictions are rejected during evaluation") {
    EvalGridSpec grid;
    grid.ofdm = tiny_cfg();
    grid.gen = tiny_gen();
    grid.windows = {WindowSpec::rectangular(), WindowSpec::hann()};
    grid.axis = SweepAxis::Density;
    grid.k_values = {1};
    grid.n_trials = 4;
    grid.batch = 4;
    grid.seed = 1;
    grid.h_t = 3;

    ConstantPredictor too_big(5);
    CHECK_THROWS_WITH_AS(evaluate_models(grid, {&too_big}),
                         doctest::Contains("outside [1, 3]"), DomainError);
}
