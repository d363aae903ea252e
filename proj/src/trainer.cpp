#include "rdcount/trainer.hpp"

#include "rdcount/errors.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

namespace rdcount {

namespace {

/** @brief In-place Fisher–Yates shuffle with draws in a pinned order. */
void shuffle_indices(std::vector<int>& idx, RandomSource& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.bounded(static_cast<std::uint64_t>(i)));
        std::swap(idx[i - 1], idx[j]);
    }
}

double cross_entropy_from_probs(const Tensor<float>& probs, const std::vector<int>& labels0) {
    double ce = 0.0;
    const int b_n = probs.n(), cc = probs.c();
    for (int b = 0; b < b_n; ++b) {
        const float* p = probs.data() + static_cast<std::size_t>(b) * cc;
        const double q = std::max(static_cast<double>(p[labels0[static_cast<std::size_t>(b)]]),
                                  1e-300);
        ce -= std::log(q);
    }
    return ce;
}

} // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (!(lr >= 0.0)) throw ConfigError("train: lr must be >= 0");
    if (!(l2 >= 0.0)) throw ConfigError("train: l2 must be >= 0");
    if (channel_select < -1) throw ConfigError("train: channel_select must be >= -1");
}

void TrainConfig::update_digest(Fnv1a& d) const {
    d.update_value(epochs);
    d.update_value(batch_size);
    d.update_value(lr);
    d.update_value(l2);
    d.update_value(seed);
    d.update_value(channel_select);
}

DatasetMetrics evaluate_on_dataset(const Network<float>& net, const ModelParams<float>& params,
                                   const Dataset& ds, int channel_select, int batch_size) {
    Workspace<float> ws;
    Tensor<float> x;
    std::vector<int> labels;
    std::vector<int> preds;
    std::vector<int> chunk;
    DatasetMetrics m;
    const int n = ds.n_samples();
    if (n == 0) throw DomainError("evaluate_on_dataset: empty dataset");
    for (int at = 0; at < n; at += batch_size) {
        const int b = std::min(batch_size, n - at);
        chunk.resize(static_cast<std::size_t>(b));
        for (int i = 0; i < b; ++i) chunk[static_cast<std::size_t>(i)] = at + i;
        gather_batch(ds, chunk, channel_select, x, labels);
        net.forward_eval(params, x, ws);
        preds.resize(static_cast<std::size_t>(b));
        net.predict_from_probs(ws, preds.data());
        std::vector<int> labels0(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) labels0[i] = labels[i] - 1;
        m.ce += cross_entropy_from_probs(ws.probs, labels0);
        for (int i = 0; i < b; ++i) {
            const double err = preds[static_cast<std::size_t>(i)] -
                               labels[static_cast<std::size_t>(i)];
            m.mse += err * err;
            if (preds[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(i)]) {
                m.accuracy += 1.0;
            }
        }
    }
    m.ce /= n;
    m.mse /= n;
    m.accuracy /= n;
    return m;
}

TrainResult train_model(const NetworkSpec& spec, const Dataset& train, const Dataset& val,
                        const TrainConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    if (train.n_samples() == 0 || val.n_samples() == 0) {
        throw DomainError("train: train and val sets must be non-empty");
    }
    const int want_c = cfg.channel_select == -1 ? train.n_channels : 1;
    if (spec.in_channels != want_c || spec.in_h != train.rows || spec.in_w != train.cols) {
        throw ConfigError("train: network input " + std::to_string(spec.in_h) + "x" +
                          std::to_string(spec.in_w) + "x" + std::to_string(spec.in_channels) +
                          " does not match dataset " + std::to_string(train.rows) + "x" +
                          std::to_string(train.cols) + "x" + std::to_string(want_c));
    }
    if (train.k_max > spec.h_t) {
        throw ConfigError("train: dataset k_max " + std::to_string(train.k_max) +
                          " exceeds class count h_t " + std::to_string(spec.h_t));
    }

    Network<float> net(spec);
    const std::uint64_t init_index = static_cast<std::uint64_t>(cfg.channel_select + 1);
    RandomSource init_rng(derive_seed(cfg.seed, SeedStream::Init, init_index));
    TrainResult result;
    result.final_params = net.init_params(init_rng);
    result.adam = net.make_adam_state(cfg.lr, cfg.l2);

    Workspace<float> ws;
    Grads<float> grads = net.make_zero_grads();
    Tensor<float> x;
    std::vector<int> labels;
    std::vector<int> order(static_cast<std::size_t>(train.n_samples()));
    for (int i = 0; i < train.n_samples(); ++i) order[static_cast<std::size_t>(i)] = i;
    std::vector<int> batch_idx;

    double best_mse = 0.0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        RandomSource shuffle_rng(
            derive_seed(cfg.seed, SeedStream::Shuffle, static_cast<std::uint64_t>(epoch)));
        shuffle_indices(order, shuffle_rng);

        double ce_sum = 0.0;
        int batch_counter = 0;
        for (int at = 0; at < train.n_samples(); at += cfg.batch_size) {
            const int b = std::min(cfg.batch_size, train.n_samples() - at);
            batch_idx.assign(order.begin() + at, order.begin() + at + b);
            gather_batch(train, batch_idx, cfg.channel_select, x, labels);
            const std::uint64_t drop_index =
                (static_cast<std::uint64_t>(epoch) << 32) |
                static_cast<std::uint64_t>(batch_counter);
            RandomSource dropout_rng(derive_seed(cfg.seed, SeedStream::Dropout, drop_index));
            const LossValue loss =
                net.loss_and_grad(result.final_params, x, labels, cfg.l2, dropout_rng, ws, grads);
            adam_step(result.adam, result.final_params, grads);
            ce_sum += loss.ce * b;
            ++batch_counter;
        }

        const DatasetMetrics vm = evaluate_on_dataset(net, result.final_params, val,
                                                      cfg.channel_select, cfg.batch_size);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_ce = ce_sum / train.n_samples();
        rec.val_ce = vm.ce;
        rec.val_mse = vm.mse;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.push_back(rec);

        if (result.best_epoch == 0 || rec.val_mse < best_mse) {
            best_mse = rec.val_mse;
            result.best_epoch = epoch;
            result.best_params = result.final_params;
        }
        if (cfg.log != nullptr) {
            (*cfg.log) << "epoch " << epoch << "/" << cfg.epochs
                       << "  train_ce=" << rec.train_ce << "  val_ce=" << rec.val_ce
                       << "  val_mse=" << rec.val_mse << "  (" << rec.seconds << "s)\n";
            cfg.log->flush();
        }
        if (on_epoch) on_epoch(rec, result.final_params, result.adam);
    }
    return result;
}

} // namespace rdcount
