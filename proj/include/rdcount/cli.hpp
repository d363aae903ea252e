#pragma once

#include "rdcount/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace rdcount {

/** @brief Locations of every artifact an experiment reads or writes; file
 *         names embed the relevant digest or seed so stale and fresh
 *         artifacts can never collide. */
struct ArtifactPaths {
    explicit ArtifactPaths(const ExperimentConfig& cfg);

    std::filesystem::path train_dataset;
    std::filesystem::path val_dataset;
    std::filesystem::path manifest;

    [[nodiscard]] std::filesystem::path ckpt_final(const std::string& tag,
                                                   std::uint64_t seed) const;
    [[nodiscard]] std::filesystem::path ckpt_best(const std::string& tag,
                                                  std::uint64_t seed) const;
    [[nodiscard]] std::filesystem::path history_file(const std::string& tag,
                                                     std::uint64_t seed) const;
    [[nodiscard]] std::filesystem::path sweep_file(const std::string& axis, std::uint64_t seed,
                                                   const std::string& ext) const;

private:
    std::filesystem::path ckpt_dir_;
    std::filesystem::path out_dir_;
};

/** @brief Full command-line entry point (parse args, dispatch, map every
 *         failure to its exit code). Streams are injected for testability. */
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/** @brief Subcommand bodies, callable directly from tests. Each throws the
 *         typed errors that run_cli maps to exit codes. */
void cmd_gen_data(const std::filesystem::path& config_path, std::ostream& out);
void cmd_train(const std::filesystem::path& config_path, const std::string& model_tag,
               std::uint64_t seed_override, bool has_seed_override, std::ostream& out);
void cmd_sweep(const std::filesystem::path& config_path, const std::string& axis,
               const std::vector<std::string>& models, bool svg, std::uint64_t seed_override,
               bool has_seed_override, std::ostream& out);
void cmd_inspect(const std::filesystem::path& path, std::ostream& out);

} // namespace rdcount
