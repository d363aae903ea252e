#include "rdcount/evaluate.hpp"

#include "rdcount/errors.hpp"

#include <algorithm>
#include <ostream>

namespace rdcount {

std::string axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::Snr: return "snr";
        case SweepAxis::Density: return "targets";
    }
    throw DomainError("axis_name: unknown axis");
}

void EvalGridSpec::validate() const {
    ofdm.validate();
    if (windows.empty()) throw ConfigError("evaluate: window bank must not be empty");
    if (n_conditions() < 1) throw ConfigError("evaluate: at least one condition required");
    if (n_trials < 1) throw ConfigError("evaluate: n_trials must be >= 1");
    if (batch < 1) throw ConfigError("evaluate: batch must be >= 1");
    if (h_t < 1) throw ConfigError("evaluate: h_t must be >= 1");
    for (int c = 0; c < n_conditions(); ++c) {
        const SceneGenConfig g = gen_for(c);
        if (g.k_max > h_t) {
            throw ConfigError("evaluate: condition count " + std::to_string(g.k_max) +
                              " exceeds h_t " + std::to_string(h_t));
        }
        g.validate(ofdm); // every condition must be realizable
    }
}

SceneGenConfig EvalGridSpec::gen_for(int c) const {
    SceneGenConfig g = gen;
    if (axis == SweepAxis::Snr) {
        g.snr_lo = snr_values[static_cast<std::size_t>(c)];
        g.snr_hi = g.snr_lo;
    } else {
        g.k_min = k_values[static_cast<std::size_t>(c)];
        g.k_max = g.k_min;
        g.snr_lo = density_snr_db;
        g.snr_hi = density_snr_db;
    }
    return g;
}

double EvalGridSpec::axis_value(int c) const {
    return axis == SweepAxis::Snr ? snr_values[static_cast<std::size_t>(c)]
                                  : static_cast<double>(k_values[static_cast<std::size_t>(c)]);
}

ModelPredictor::ModelPredictor(std::string name, NetworkSpec spec, ModelParams<float> params,
                               int channel_select)
    : name_(std::move(name)),
      net_(std::move(spec)),
      params_(std::move(params)),
      channel_select_(channel_select) {}

void ModelPredictor::predict(const Tensor<float>& x, const std::vector<int>& truth,
                             std::vector<int>& out) {
    (void)truth;
    out.resize(static_cast<std::size_t>(x.n()));
    net_.forward_eval(params_, x, ws_);
    net_.predict_from_probs(ws_, out.data());
}

void ConstantPredictor::predict(const Tensor<float>& x, const std::vector<int>& truth,
                                std::vector<int>& out) {
    (void)truth;
    out.assign(static_cast<std::size_t>(x.n()), count_);
}

void TruthPredictor::predict(const Tensor<float>& x, const std::vector<int>& truth,
                             std::vector<int>& out) {
    (void)x;
    out = truth;
}

void slice_channel(const Tensor<float>& src, int channel, Tensor<float>& dst) {
    if (channel < 0 || channel >= src.c()) {
        throw DomainError("slice_channel: channel out of range");
    }
    if (dst.n() != src.n() || dst.h() != src.h() || dst.w() != src.w() || dst.c() != 1) {
        dst = Tensor<float>(src.n(), src.h(), src.w(), 1);
    }
    const std::size_t pixels = src.size() / static_cast<std::size_t>(src.c());
    const float* p = src.data();
    float* o = dst.data();
    const int cc = src.c();
    for (std::size_t i = 0; i < pixels; ++i) {
        o[i] = p[i * static_cast<std::size_t>(cc) + static_cast<std::size_t>(channel)];
    }
}

EvalResult evaluate_models(const EvalGridSpec& grid,
                           const std::vector<CountPredictor*>& predictors,
                           std::ostream* log) {
    grid.validate();
    if (predictors.empty()) throw ConfigError("evaluate: no predictors given");

    EvalResult result;
    result.axis = grid.axis;
    for (auto* p : predictors) result.model_names.push_back(p->name());
    result.cells.assign(static_cast<std::size_t>(grid.n_conditions()),
                        std::vector<EvalCell>(predictors.size()));

    PeriodogramEngine engine(grid.ofdm);
    std::vector<Window2d> bank;
    for (const auto& wspec : grid.windows) {
        bank.push_back(Window2d::separable(wspec, grid.ofdm));
    }
    const int rows = grid.ofdm.crop_rows;
    const int cols = grid.ofdm.crop_cols;
    const int n_ch = static_cast<int>(grid.windows.size());

    std::vector<RealMat> crops(bank.size());
    Tensor<float> x_all;
    Tensor<float> x_one;
    std::vector<int> truth;
    std::vector<int> preds;

    for (int c = 0; c < grid.n_conditions(); ++c) {
        result.axis_values.push_back(grid.axis_value(c));
        const SceneGenConfig gen_c = grid.gen_for(c);
        for (int at = 0; at < grid.n_trials; at += grid.batch) {
            const int b = std::min(grid.batch, grid.n_trials - at);
            if (x_all.n() != b) x_all = Tensor<float>(b, rows, cols, n_ch);
            truth.resize(static_cast<std::size_t>(b));
            for (int t = 0; t < b; ++t) {
                const std::uint64_t trial_index =
                    (static_cast<std::uint64_t>(grid.axis) << 56) |
                    (static_cast<std::uint64_t>(c) << 32) |
                    static_cast<std::uint64_t>(at + t);
                RandomSource rng(derive_seed(grid.seed, SeedStream::EvalData, trial_index));
                const SceneSpec scene = sample_scene(grid.ofdm, gen_c, rng);
                const NormalizedFrame frame = make_frame(grid.ofdm, scene, rng);
                for (std::size_t w = 0; w < bank.size(); ++w) {
                    const RdMap map = engine.compute(frame, bank[w]);
                    crops[w] = crop_map(map, grid.ofdm);
                }
                const RdInput input = to_input(crops, grid.scale);
                for (int ch = 0; ch < n_ch; ++ch) {
                    const RealMat& plane = input.channels[static_cast<std::size_t>(ch)];
                    for (int r = 0; r < rows; ++r) {
                        for (int cc2 = 0; cc2 < cols; ++cc2) {
                            x_all(t, r, cc2, ch) = static_cast<float>(plane(r, cc2));
                        }
                    }
                }
                truth[static_cast<std::size_t>(t)] = static_cast<int>(scene.targets.size());
            }

            for (std::size_t pi = 0; pi < predictors.size(); ++pi) {
                CountPredictor& pred = *predictors[pi];
                const Tensor<float>* input = &x_all;
                if (pred.channel_select() != -1) {
                    slice_channel(x_all, pred.channel_select(), x_one);
                    input = &x_one;
                }
                pred.predict(*input, truth, preds);
                EvalCell& cell = result.cells[static_cast<std::size_t>(c)][pi];
                for (int t = 0; t < b; ++t) {
                    const int est = preds[static_cast<std::size_t>(t)];
                    if (est < 1 || est > grid.h_t) {
                        throw DomainError("evaluate: predictor '" + pred.name() +
                                          "' answered " + std::to_string(est) +
                                          " outside [1, " + std::to_string(grid.h_t) + "]");
                    }
                    const double err = est - truth[static_cast<std::size_t>(t)];
                    cell.mse += err * err;
                    cell.bias += err;
                    cell.n += 1;
                }
            }
        }
        for (auto& cell : result.cells[static_cast<std::size_t>(c)]) {
            cell.mse /= cell.n;
            cell.bias /= cell.n;
        }
        if (log != nullptr) {
            (*log) << axis_name(grid.axis) << "=" << grid.axis_value(c);
            for (std::size_t pi = 0; pi < predictors.size(); ++pi) {
                (*log) << "  " << result.model_names[pi] << " mse="
                       << result.cells[static_cast<std::size_t>(c)][pi].mse;
            }
            (*log) << "\n";
            log->flush();
        }
    }
    return result;
}

} // namespace rdcount
