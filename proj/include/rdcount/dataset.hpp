#pragma once

#include "rdcount/periodogram.hpp"
#include "rdcount/random_source.hpp"
#include "rdcount/scene.hpp"
#include "rdcount/tensor.hpp"
#include "rdcount/window.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace rdcount {

/** @brief Everything needed to synthesize a labelled sample set
 *         reproducibly: signal geometry, scene statistics, the window bank,
 *         the output scale, the sample count, and the seed/stream pair. */
struct DatasetBuildSpec {
    OfdmConfig ofdm;
    SceneGenConfig gen;
    std::vector<WindowSpec> windows;
    Scale scale = Scale::Decibel;
    int n_samples = 0;
    std::uint64_t seed = 0;
    SeedStream stream = SeedStream::TrainData;

    void validate() const;
    [[nodiscard]] std::uint64_t digest() const;
};

/** @brief In-memory sample set: per-sample label (target count), SNR, scene
 *         digest, and the stacked crop planes.
 *
 *  Layout of `data`: sample-major; within a sample, one plane per window in
 *  bank order, each plane row-major rows x cols, float32.
 */
struct Dataset {
    int rows = 0;
    int cols = 0;
    int n_channels = 0;
    Scale scale = Scale::Decibel;
    int k_max = 0; ///< largest label the generator can emit
    std::uint64_t seed = 0;
    SeedStream stream = SeedStream::TrainData;
    std::uint64_t config_digest = 0; ///< DatasetBuildSpec::digest() at build time
    std::vector<WindowSpec> windows;

    std::vector<int> labels;
    std::vector<float> snr_db;
    std::vector<std::uint64_t> scene_digests;
    std::vector<float> data;

    [[nodiscard]] int n_samples() const { return static_cast<int>(labels.size()); }
    [[nodiscard]] std::size_t sample_stride() const {
        return static_cast<std::size_t>(n_channels) * rows * cols;
    }
    [[nodiscard]] const float* sample_ptr(int i) const {
        return data.data() + static_cast<std::size_t>(i) * sample_stride();
    }
};

/** @brief Fixed fields of the on-disk container, readable without loading
 *         the payload. */
struct DatasetHeader {
    int rows = 0;
    int cols = 0;
    int n_channels = 0;
    Scale scale = Scale::Decibel;
    int k_max = 0;
    std::uint64_t n_samples = 0;
    std::uint64_t seed = 0;
    SeedStream stream = SeedStream::TrainData;
    std::uint64_t config_digest = 0;
    std::vector<WindowSpec> windows;
};

/** @brief Synthesize the full sample set. Per sample i the generator seed is
 *         derive_seed(seed, stream, i); the scene is drawn, then ONE noisy
 *         frame is synthesized, and every window in the bank is applied to
 *         that same frame so channels differ only by window. */
Dataset build_dataset(const DatasetBuildSpec& spec,
                      const std::function<void(int, int)>& progress = {});

/** @brief Write the dataset to its binary container (atomic: temp + rename).
 *         A running FNV-1a digest of every preceding byte is appended as the
 *         trailer. */
void save_dataset(const std::filesystem::path& path, const Dataset& ds);

/** @brief Read a dataset back; throws MissingArtifactError if absent and
 *         FormatError on bad magic/version/geometry or digest mismatch. */
Dataset load_dataset(const std::filesystem::path& path);

/** @brief Read only the header (cheap existence/compatibility probe). */
DatasetHeader read_dataset_header(const std::filesystem::path& path);

/** @brief Copy selected samples into an NHWC batch tensor.
 *
 *  channel_select == -1 copies every channel; otherwise only that channel
 *  (the tensor then has c == 1). Labels are the raw counts (1-based).
 */
void gather_batch(const Dataset& ds, const std::vector<int>& indices, int channel_select,
                  Tensor<float>& x, std::vector<int>& labels);

} // namespace rdcount
