#pragma once

#include "rdcount/dataset.hpp"
#include "rdcount/evaluate.hpp"
#include "rdcount/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rdcount {

/** @brief Artifact directories; relative entries resolve against the data
 *         root (RDCOUNT_DATA_ROOT when set, else the config file's folder). */
struct PathsConfig {
    std::filesystem::path data_dir = "data";
    std::filesystem::path ckpt_dir = "ckpt";
    std::filesystem::path out_dir = "out";
};

/** @brief Sweep grids and trial counts. */
struct EvalConfig {
    std::vector<double> snr_grid{-30, -25, -20, -15, -10, -5, 0, 5, 9};
    double fixed_snr_db = -15.0;
    std::vector<int> k_grid; ///< defaults to 1..h_t when left empty
    int n_trials = 2000;
};

/** @brief One experiment, end to end: signal geometry, scene statistics,
 *         window bank, dataset sizes, training schedule, sweep grids, and
 *         artifact locations. Loaded fail-closed from JSON. */
struct ExperimentConfig {
    std::string profile = "full"; ///< "full" or "desk" (sets the defaults)
    std::uint64_t seed = 1;
    int h_t = 12;
    OfdmConfig ofdm;
    SceneGenConfig gen;
    std::vector<WindowSpec> windows; ///< [0] rectangular; [1] the low-sidelobe window
    Scale scale = Scale::Decibel;
    int n_train = 50000;
    int n_val = 5000;
    TrainConfig train;
    EvalConfig eval;
    PathsConfig paths;
    std::string default_model; ///< optional; used when train has no --model

    std::filesystem::path base_dir; ///< folder of the config file (set at load)

    void validate() const;

    /** @brief Identity of the generated datasets (geometry, scenes, windows,
     *         scale, sizes, seed). Names the .rdds and manifest files. */
    [[nodiscard]] std::uint64_t data_digest() const;

    /** @brief Identity of a trained model: data digest plus architecture,
     *         schedule, model tag, and the effective seed. Embedded in the
     *         checkpoint and cross-checked before any sweep. */
    [[nodiscard]] std::uint64_t model_digest(const std::string& model_tag,
                                             std::uint64_t effective_seed) const;

    /** @brief Build specs for the two cached datasets. */
    [[nodiscard]] DatasetBuildSpec train_build_spec() const;
    [[nodiscard]] DatasetBuildSpec val_build_spec() const;

    /** @brief Network for a model tag ("single_rect" | "single_hann" |
     *         "dual") at this experiment's crop geometry. */
    [[nodiscard]] NetworkSpec network_for(const std::string& model_tag) const;

    /** @brief Resolve one of the configured directories to an absolute path. */
    [[nodiscard]] std::filesystem::path resolve(const std::filesystem::path& dir) const;
};

/** @brief Channel a model tag consumes: -1 (dual), 0 (rect), 1 (low-sidelobe). */
[[nodiscard]] int model_channel_select(const std::string& model_tag);

/** @brief The three supported model tags, in canonical order. */
[[nodiscard]] const std::vector<std::string>& model_tags();

/** @brief Parse and validate a JSON experiment config. Unknown keys anywhere
 *         are an error (fail-closed), as is any type mismatch; both name the
 *         offending key. */
ExperimentConfig load_config(const std::filesystem::path& path);

/** @brief Hex representation (16 digits) used in artifact file names. */
[[nodiscard]] std::string digest_hex(std::uint64_t digest);

} // namespace rdcount
