#pragma once

#include "rdcount/dataset.hpp"
#include "rdcount/network.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace rdcount {

/** @brief Optimization schedule and channel selection for one training run. */
struct TrainConfig {
    int epochs = 12;
    int batch_size = 50;
    double lr = 1e-3;
    double l2 = 1e-4;
    std::uint64_t seed = 0;        ///< base seed; init/shuffle/dropout derive from it
    int channel_select = -1;       ///< -1: all dataset channels; else one channel
    std::ostream* log = nullptr;   ///< per-epoch progress lines when non-null

    void validate() const;
    void update_digest(Fnv1a& d) const;
};

/** @brief Metrics recorded after each epoch. */
struct EpochRecord {
    int epoch = 0;       ///< 1-based
    double train_ce = 0; ///< mean cross-entropy over the epoch's train batches
    double val_ce = 0;   ///< eval-mode cross-entropy on the validation set
    double val_mse = 0;  ///< eval-mode squared count error on the validation set
    double seconds = 0;  ///< wall-clock time of the epoch
};

/** @brief Invoked after each epoch with the current state; lets callers
 *         checkpoint mid-run. */
using EpochCallback = std::function<void(const EpochRecord&, const ModelParams<float>&,
                                         const AdamState<float>&)>;

/** @brief Outcome of a run: epoch history plus final and best-validation
 *         parameter snapshots. */
struct TrainResult {
    std::vector<EpochRecord> history;
    ModelParams<float> final_params;
    ModelParams<float> best_params;
    int best_epoch = 0; ///< 1-based; smallest val_mse, ties to the earlier epoch
    AdamState<float> adam;
};

/** @brief Eval-mode metrics of a parameter set over a dataset. */
struct DatasetMetrics {
    double ce = 0.0;
    double mse = 0.0;
    double accuracy = 0.0;
};

DatasetMetrics evaluate_on_dataset(const Network<float>& net, const ModelParams<float>& params,
                                   const Dataset& ds, int channel_select, int batch_size);

/** @brief Train a fresh model on `train`, validating on `val` each epoch.
 *
 *  Deterministic for a fixed config: initialization, per-epoch shuffles, and
 *  per-batch dropout all use seeds derived from cfg.seed, so reruns are
 *  bit-identical.
 */
TrainResult train_model(const NetworkSpec& spec, const Dataset& train, const Dataset& val,
                        const TrainConfig& cfg, const EpochCallback& on_epoch = {});

} // namespace rdcount
