#pragma once

#include <stdexcept>
#include <string>

namespace rdcount {

/** @brief Invalid or internally inconsistent user-supplied configuration. */
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/** @brief Malformed, truncated, or digest-mismatched on-disk artifact. */
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/** @brief A referenced artifact (dataset, checkpoint) does not exist. */
class MissingArtifactError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/** @brief Violated runtime precondition (bad argument, shape mismatch). */
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/** @brief Process exit codes shared by the CLI and its tests. */
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitMissing = 3,
    kExitCorrupt = 4,
};

} // namespace rdcount
