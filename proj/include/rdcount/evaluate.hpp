#pragma once

#include "rdcount/dataset.hpp"
#include "rdcount/network.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace rdcount {

/** @brief Sweep axis: signal-to-noise ratio or target count (echo density). */
enum class SweepAxis : std::uint8_t { Snr = 1, Density = 2 };

[[nodiscard]] std::string axis_name(SweepAxis axis);

/** @brief A sweep over one axis: every condition fixes either the SNR (count
 *         drawn from the base generator range) or the count (SNR fixed at
 *         density_snr_db). Each condition evaluates n_trials fresh scenes. */
struct EvalGridSpec {
    OfdmConfig ofdm;
    SceneGenConfig gen;
    std::vector<WindowSpec> windows;
    Scale scale = Scale::Decibel;
    SweepAxis axis = SweepAxis::Snr;
    std::vector<double> snr_values; ///< used when axis == Snr
    std::vector<int> k_values;      ///< used when axis == Density
    double density_snr_db = -15.0;  ///< SNR pinned during density sweeps
    int n_trials = 2000;
    int batch = 50;
    std::uint64_t seed = 0;
    int h_t = 12; ///< count ceiling; every estimate must land in [1, h_t]

    void validate() const;
    [[nodiscard]] int n_conditions() const {
        return static_cast<int>(axis == SweepAxis::Snr ? snr_values.size() : k_values.size());
    }
    /** @brief Generator for condition index c (overrides applied). */
    [[nodiscard]] SceneGenConfig gen_for(int c) const;
    /** @brief Axis value of condition c (SNR in dB, or count as a double). */
    [[nodiscard]] double axis_value(int c) const;
};

/** @brief Anything that maps a batch of range-Doppler inputs to count
 *         estimates. `truth` is supplied for reference baselines only. */
class CountPredictor {
public:
    virtual ~CountPredictor() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    /** @brief -1 consumes every channel; otherwise one channel index. */
    [[nodiscard]] virtual int channel_select() const { return -1; }
    virtual void predict(const Tensor<float>& x, const std::vector<int>& truth,
                         std::vector<int>& out) = 0;
};

/** @brief Trained-network predictor (eval mode, batched). */
class ModelPredictor final : public CountPredictor {
public:
    ModelPredictor(std::string name, NetworkSpec spec, ModelParams<float> params,
                   int channel_select);
    [[nodiscard]] std::string name() const override { return name_; }
    [[nodiscard]] int channel_select() const override { return channel_select_; }
    void predict(const Tensor<float>& x, const std::vector<int>& truth,
                 std::vector<int>& out) override;

private:
    std::string name_;
    Network<float> net_;
    ModelParams<float> params_;
    int channel_select_;
    Workspace<float> ws_;
};

/** @brief Always answers the same count (reference baseline). */
class ConstantPredictor final : public CountPredictor {
public:
    explicit ConstantPredictor(int count) : count_(count) {}
    [[nodiscard]] std::string name() const override {
        return "constant" + std::to_string(count_);
    }
    void predict(const Tensor<float>& x, const std::vector<int>& truth,
                 std::vector<int>& out) override;

private:
    int count_;
};

/** @brief Echoes the true count (zero-error reference). */
class TruthPredictor final : public CountPredictor {
public:
    [[nodiscard]] std::string name() const override { return "truth"; }
    void predict(const Tensor<float>& x, const std::vector<int>& truth,
                 std::vector<int>& out) override;
};

/** @brief Per-(condition, model) aggregate over the trials. */
struct EvalCell {
    double mse = 0.0;
    double bias = 0.0; ///< mean of (estimate - truth)
    int n = 0;
};

struct EvalResult {
    SweepAxis axis = SweepAxis::Snr;
    std::vector<double> axis_values;
    std::vector<std::string> model_names;
    std::vector<std::vector<EvalCell>> cells; ///< [condition][model]
};

/** @brief Run the sweep: per condition, synthesize n_trials fresh scenes
 *         (seed stream EvalData, indexed by condition and trial so the trial
 *         set is identical for every predictor) and score every predictor on
 *         the same inputs. */
EvalResult evaluate_models(const EvalGridSpec& grid,
                           const std::vector<CountPredictor*>& predictors,
                           std::ostream* log = nullptr);

/** @brief Copy one channel of an NHWC batch into a single-channel batch. */
void slice_channel(const Tensor<float>& src, int channel, Tensor<float>& dst);

} // namespace rdcount
