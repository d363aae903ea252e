#pragma once

#include "rdcount/network.hpp"
#include "rdcount/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rdcount {

/** @brief A trained-model snapshot: architecture, provenance, per-epoch
 *         history, every tensor, and (optionally) the optimizer state so a
 *         run can resume exactly. */
struct Checkpoint {
    NetworkSpec spec;
    std::string tag;     ///< model identity, e.g. "dual", "rect", "sidelobe"
    int epoch = 0;       ///< epoch this snapshot was taken at (1-based)
    std::uint64_t config_digest = 0; ///< binds the file to its experiment config
    std::uint64_t seed = 0;          ///< training seed
    std::vector<EpochRecord> history;
    ModelParams<float> params;
    bool has_adam = false;
    AdamState<float> adam;
};

/** @brief Header-and-history view, readable without touching tensor data. */
struct CheckpointMeta {
    NetworkSpec spec;
    std::string tag;
    int epoch = 0;
    std::uint64_t config_digest = 0;
    std::uint64_t seed = 0;
    std::vector<EpochRecord> history;
};

/** @brief Write the snapshot (atomic temp + rename, FNV-1a trailer). The
 *         round trip is bit-exact: tensors are stored as raw float32. */
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/** @brief Load and fully verify a snapshot (names, shapes, digest). Throws
 *         MissingArtifactError if absent, FormatError on any corruption. */
Checkpoint load_checkpoint(const std::filesystem::path& path);

/** @brief Read architecture/history only (no tensor payload, no digest
 *         verification — use load_checkpoint for integrity). */
CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path);

} // namespace rdcount
