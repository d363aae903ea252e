#include "rdcount/cli.hpp"

#include "rdcount/binio.hpp"
#include "rdcount/checkpoint.hpp"
#include "rdcount/errors.hpp"
#include "rdcount/report.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <ostream>
#include <string_view>

namespace rdcount {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string seed_token(std::uint64_t seed) { return "seed" + std::to_string(seed); }

/** @brief Load one cached dataset, enforcing the stale-artifact guard: the
 *         file must exist, verify, and carry the digest of `expect`. */
Dataset load_verified_dataset(const fs::path& path, const DatasetBuildSpec& expect,
                              const fs::path& config_path) {
    if (!fs::exists(path)) {
        throw MissingArtifactError(
            "dataset not found: " + path.string() + " — run `rdcount gen-data --config " +
            config_path.string() + "` first");
    }
    Dataset ds = load_dataset(path);
    if (ds.config_digest != expect.digest()) {
        throw FormatError("dataset " + path.string() +
                          " was built from a different configuration (stale artifact); "
                          "delete it and re-run gen-data");
    }
    return ds;
}

json window_json(const WindowSpec& w) {
    json j;
    j["kind"] = w.name();
    if (w.kind == WindowKind::DolphChebyshev) j["attenuation_db"] = w.attenuation_db;
    return j;
}

json manifest_json(const ExperimentConfig& cfg, const ArtifactPaths& paths) {
    json m;
    m["config_digest"] = digest_hex(cfg.data_digest());
    m["seed"] = cfg.seed;
    m["profile"] = cfg.profile;
    m["h_t"] = cfg.h_t;
    m["scale"] = cfg.scale == Scale::Decibel ? "db" : "linear";
    json ofdm;
    ofdm["n_fft"] = cfg.ofdm.n_fft;
    ofdm["n_use"] = cfg.ofdm.n_use;
    ofdm["m_symbols"] = cfg.ofdm.m_symbols;
    ofdm["m_per"] = cfg.ofdm.m_per;
    ofdm["delta_f"] = cfg.ofdm.delta_f;
    ofdm["f_c"] = cfg.ofdm.f_c;
    ofdm["t_cp"] = cfg.ofdm.t_cp;
    ofdm["crop_rows"] = cfg.ofdm.crop_rows;
    ofdm["crop_cols"] = cfg.ofdm.crop_cols;
    m["ofdm"] = ofdm;
    json gen;
    gen["k_min"] = cfg.gen.k_min;
    gen["k_max"] = cfg.gen.k_max;
    gen["d_min"] = cfg.gen.d_min;
    gen["d_max"] = cfg.gen.d_max;
    gen["d_ref"] = cfg.gen.d_ref_effective();
    gen["v_max"] = cfg.gen.v_max_effective(cfg.ofdm);
    gen["snr_lo"] = cfg.gen.snr_lo;
    gen["snr_hi"] = cfg.gen.snr_hi;
    m["gen"] = gen;
    json windows = json::array();
    for (const auto& w : cfg.windows) windows.push_back(window_json(w));
    m["windows"] = windows;
    json train;
    train["path"] = paths.train_dataset.filename().string();
    train["n_samples"] = cfg.n_train;
    train["build_digest"] = digest_hex(cfg.train_build_spec().digest());
    m["train"] = train;
    json val;
    val["path"] = paths.val_dataset.filename().string();
    val["n_samples"] = cfg.n_val;
    val["build_digest"] = digest_hex(cfg.val_build_spec().digest());
    m["val"] = val;
    return m;
}

void print_history_tail(const std::vector<EpochRecord>& history, std::ostream& out) {
    if (history.empty()) return;
    const auto& last = history.back();
    out << "  last epoch " << last.epoch << ": train_ce=" << format_number(last.train_ce)
        << " val_ce=" << format_number(last.val_ce)
        << " val_mse=" << format_number(last.val_mse) << "\n";
}

} // namespace

ArtifactPaths::ArtifactPaths(const ExperimentConfig& cfg) {
    const fs::path data_dir = cfg.resolve(cfg.paths.data_dir);
    ckpt_dir_ = cfg.resolve(cfg.paths.ckpt_dir);
    out_dir_ = cfg.resolve(cfg.paths.out_dir);
    const std::string hex = digest_hex(cfg.data_digest());
    train_dataset = data_dir / ("train_" + hex + ".rdds");
    val_dataset = data_dir / ("val_" + hex + ".rdds");
    manifest = data_dir / ("manifest_" + hex + ".json");
}

fs::path ArtifactPaths::ckpt_final(const std::string& tag, std::uint64_t seed) const {
    return ckpt_dir_ / (tag + "_" + seed_token(seed) + "_final.rdck");
}

fs::path ArtifactPaths::ckpt_best(const std::string& tag, std::uint64_t seed) const {
    return ckpt_dir_ / (tag + "_" + seed_token(seed) + "_best.rdck");
}

fs::path ArtifactPaths::history_file(const std::string& tag, std::uint64_t seed) const {
    return out_dir_ / ("history_" + tag + "_" + seed_token(seed) + ".csv");
}

fs::path ArtifactPaths::sweep_file(const std::string& axis, std::uint64_t seed,
                                   const std::string& ext) const {
    return out_dir_ / ("sweep_" + axis + "_" + seed_token(seed) + "." + ext);
}

void cmd_gen_data(const fs::path& config_path, std::ostream& out) {
    const ExperimentConfig cfg = load_config(config_path);
    const ArtifactPaths paths(cfg);

    const auto handle = [&](const char* which, const DatasetBuildSpec& spec,
                            const fs::path& path) {
        if (fs::exists(path)) {
            const Dataset existing = load_dataset(path); // throws FormatError if corrupt
            if (existing.config_digest != spec.digest()) {
                throw FormatError("dataset " + path.string() +
                                  " exists but was built from a different configuration "
                                  "(digest mismatch); delete it to regenerate");
            }
            out << which << " dataset verified: " << path.string() << " ("
                << existing.n_samples() << " samples)\n";
            return;
        }
        out << "building " << which << " dataset (" << spec.n_samples << " samples) -> "
            << path.string() << "\n";
        const int step = std::max(1, spec.n_samples / 10);
        const Dataset ds = build_dataset(spec, [&](int done, int total) {
            if (done % step == 0 || done == total) {
                out << "  " << done << "/" << total << "\n";
                out.flush();
            }
        });
        save_dataset(path, ds);
    };

    handle("train", cfg.train_build_spec(), paths.train_dataset);
    handle("val", cfg.val_build_spec(), paths.val_dataset);

    write_file_atomic(paths.manifest, manifest_json(cfg, paths).dump(2) + "\n");
    out << "manifest: " << paths.manifest.string() << "\n";
}

void cmd_train(const fs::path& config_path, const std::string& model_tag,
               std::uint64_t seed_override, bool has_seed_override, std::ostream& out) {
    const ExperimentConfig cfg = load_config(config_path);
    std::string tag = model_tag;
    if (tag.empty()) tag = cfg.default_model;
    if (tag.empty()) {
        throw ConfigError("no model selected: pass --model or set 'network' in the config");
    }
    const int channel = model_channel_select(tag);
    const std::uint64_t seed = has_seed_override ? seed_override : cfg.seed;
    const ArtifactPaths paths(cfg);

    const Dataset train_ds =
        load_verified_dataset(paths.train_dataset, cfg.train_build_spec(), config_path);
    const Dataset val_ds =
        load_verified_dataset(paths.val_dataset, cfg.val_build_spec(), config_path);

    const NetworkSpec spec = cfg.network_for(tag);
    TrainConfig tcfg = cfg.train;
    tcfg.seed = seed;
    tcfg.channel_select = channel;
    tcfg.log = &out;

    out << "training '" << tag << "' (" << seed_token(seed) << ", " << tcfg.epochs
        << " epochs, batch " << tcfg.batch_size << ")\n";
    const TrainResult result = train_model(spec, train_ds, val_ds, tcfg);

    const std::uint64_t model_dig = cfg.model_digest(tag, seed);
    Checkpoint final_ckpt;
    final_ckpt.spec = spec;
    final_ckpt.tag = tag;
    final_ckpt.epoch = tcfg.epochs;
    final_ckpt.config_digest = model_dig;
    final_ckpt.seed = seed;
    final_ckpt.history = result.history;
    final_ckpt.params = result.final_params;
    final_ckpt.has_adam = true;
    final_ckpt.adam = result.adam;
    save_checkpoint(paths.ckpt_final(tag, seed), final_ckpt);

    Checkpoint best_ckpt;
    best_ckpt.spec = spec;
    best_ckpt.tag = tag;
    best_ckpt.epoch = result.best_epoch;
    best_ckpt.config_digest = model_dig;
    best_ckpt.seed = seed;
    best_ckpt.history = result.history;
    best_ckpt.params = result.best_params;
    best_ckpt.has_adam = false;
    save_checkpoint(paths.ckpt_best(tag, seed), best_ckpt);

    write_file_atomic(paths.history_file(tag, seed), history_csv(result.history));

    out << "final checkpoint: " << paths.ckpt_final(tag, seed).string() << "\n";
    out << "best checkpoint (epoch " << result.best_epoch
        << "): " << paths.ckpt_best(tag, seed).string() << "\n";
    out << "history: " << paths.history_file(tag, seed).string() << "\n";
}

void cmd_sweep(const fs::path& config_path, const std::string& axis,
               const std::vector<std::string>& models, bool svg, std::uint64_t seed_override,
               bool has_seed_override, std::ostream& out) {
    const ExperimentConfig cfg = load_config(config_path);
    if (axis != "snr" && axis != "targets") {
        throw ConfigError("sweep axis must be 'snr' or 'targets', got '" + axis + "'");
    }
    if (models.empty()) throw ConfigError("sweep: pass at least one model via --models");
    const std::uint64_t seed = has_seed_override ? seed_override : cfg.seed;
    const ArtifactPaths paths(cfg);

    std::vector<std::unique_ptr<ModelPredictor>> owned;
    std::vector<CountPredictor*> predictors;
    for (const std::string& tag : models) {
        const int channel = model_channel_select(tag);
        const fs::path ckpt_path = paths.ckpt_best(tag, seed);
        if (!fs::exists(ckpt_path)) {
            throw MissingArtifactError("checkpoint not found: " + ckpt_path.string() +
                                       " — run `rdcount train --config " + config_path.string() +
                                       " --model " + tag + "` first");
        }
        Checkpoint ckpt = load_checkpoint(ckpt_path);
        if (ckpt.config_digest != cfg.model_digest(tag, seed)) {
            throw FormatError("checkpoint " + ckpt_path.string() +
                              " was trained under a different configuration (stale artifact); "
                              "re-run train");
        }
        owned.push_back(std::make_unique<ModelPredictor>(tag, ckpt.spec, std::move(ckpt.params),
                                                         channel));
        predictors.push_back(owned.back().get());
    }

    EvalGridSpec grid;
    grid.ofdm = cfg.ofdm;
    grid.gen = cfg.gen;
    grid.windows = cfg.windows;
    grid.scale = cfg.scale;
    grid.axis = axis == "snr" ? SweepAxis::Snr : SweepAxis::Density;
    grid.snr_values = cfg.eval.snr_grid;
    grid.k_values = cfg.eval.k_grid;
    grid.density_snr_db = cfg.eval.fixed_snr_db;
    grid.n_trials = cfg.eval.n_trials;
    grid.batch = cfg.train.batch_size;
    grid.seed = seed;
    grid.h_t = cfg.h_t;

    out << "sweep axis=" << axis << " (" << grid.n_conditions() << " conditions x "
        << grid.n_trials << " trials, " << seed_token(seed) << ")\n";
    const EvalResult result = evaluate_models(grid, predictors, &out);

    const fs::path csv_path = paths.sweep_file(axis, seed, "csv");
    write_file_atomic(csv_path, sweep_csv(result));
    out << "sweep csv: " << csv_path.string() << "\n";
    if (svg) {
        const fs::path svg_path = paths.sweep_file(axis, seed, "svg");
        write_file_atomic(svg_path, sweep_svg(result));
        out << "sweep svg: " << svg_path.string() << "\n";
    }
}

void cmd_inspect(const fs::path& path, std::ostream& out) {
    std::ifstream in = open_for_read(path);
    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() != 4) throw FormatError(path.string() + ": too short to identify");
    in.close();

    if (std::string_view(magic, 4) == "RDDS") {
        const DatasetHeader h = read_dataset_header(path);
        out << "dataset " << path.string() << "\n";
        out << "  samples: " << h.n_samples << "\n";
        out << "  crop: " << h.rows << "x" << h.cols << ", channels: " << h.n_channels
            << " (";
        for (std::size_t i = 0; i < h.windows.size(); ++i) {
            out << (i ? ", " : "") << h.windows[i].name();
        }
        out << ")\n";
        out << "  scale: " << (h.scale == Scale::Decibel ? "db" : "linear") << "\n";
        out << "  k_max: " << h.k_max << "\n";
        out << "  seed: " << h.seed << " (stream " << static_cast<std::uint64_t>(h.stream)
            << ")\n";
        out << "  config digest: " << digest_hex(h.config_digest) << "\n";
        return;
    }
    if (std::string_view(magic, 4) == "RDCK") {
        const CheckpointMeta meta = read_checkpoint_meta(path);
        out << "checkpoint " << path.string() << "\n";
        out << "  model: " << meta.tag << " (epoch " << meta.epoch << ", seed " << meta.seed
            << ")\n";
        out << "  input: " << meta.spec.in_h << "x" << meta.spec.in_w << "x"
            << meta.spec.in_channels << ", classes: " << meta.spec.h_t << "\n";
        out << "  blocks:";
        for (int w : meta.spec.block_widths) out << " " << w;
        out << " (head " << meta.spec.head_channels << ")\n";
        out << "  config digest: " << digest_hex(meta.config_digest) << "\n";
        out << "  epochs recorded: " << meta.history.size() << "\n";
        print_history_tail(meta.history, out);
        return;
    }
    throw FormatError(path.string() + ": not a dataset or checkpoint file");
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"OFDM range-Doppler target-counting laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string model;
    std::string axis;
    std::vector<std::string> models;
    std::string inspect_path;
    bool svg = false;
    std::uint64_t seed_override = 0;
    bool has_seed = false;

    auto* gen = app.add_subcommand("gen-data", "synthesize and cache the train/val datasets");
    gen->add_option("--config", config_path, "experiment config JSON")->required();

    auto* train = app.add_subcommand("train", "train one model variant");
    train->add_option("--config", config_path, "experiment config JSON")->required();
    train->add_option("--model", model, "single_rect | single_hann | dual");
    auto* train_seed = train->add_option("--seed", seed_override,
                                         "override the training/eval seed "
                                         "(datasets keep the config seed)");

    auto* sweep = app.add_subcommand("sweep", "evaluate trained models over a grid");
    sweep->add_option("--config", config_path, "experiment config JSON")->required();
    sweep->add_option("--axis", axis, "snr | targets")->required();
    sweep->add_option("--models", models, "comma-separated model tags")
        ->required()
        ->delimiter(',');
    sweep->add_flag("--svg", svg, "also render an SVG chart");
    auto* sweep_seed = sweep->add_option("--seed", seed_override,
                                         "override the training/eval seed");

    auto* inspect = app.add_subcommand("inspect", "describe a dataset or checkpoint file");
    inspect->add_option("path", inspect_path, "artifact path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (gen->parsed()) {
            cmd_gen_data(config_path, out);
        } else if (train->parsed()) {
            has_seed = train_seed->count() > 0;
            cmd_train(config_path, model, seed_override, has_seed, out);
        } else if (sweep->parsed()) {
            has_seed = sweep_seed->count() > 0;
            cmd_sweep(config_path, axis, models, svg, seed_override, has_seed, out);
        } else if (inspect->parsed()) {
            cmd_inspect(inspect_path, out);
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const MissingArtifactError& e) {
        err << "missing artifact: " << e.what() << "\n";
        return kExitMissing;
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << "\n";
        return kExitCorrupt;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

} // namespace rdcount
