#pragma once

#include "rdcount/digest.hpp"
#include "rdcount/errors.hpp"
#include "rdcount/layers.hpp"
#include "rdcount/periodogram.hpp"
#include "rdcount/random_source.hpp"
#include "rdcount/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace rdcount {

/** @brief Architecture description for the count classifier.
 *
 *  Each block is Conv(5x5, same padding, stride 1) -> BatchNorm -> ReLU ->
 *  MaxPool(2x2, stride 2); dropout (inverted scaling) follows the blocks
 *  listed in dropout_after. The head is Conv(1x1, head_channels) -> ReLU ->
 *  global average pool -> fully connected to h_t classes -> softmax.
 */
struct NetworkSpec {
    int in_h = 200;
    int in_w = 200;
    int in_channels = 2;
    int h_t = 12;
    std::vector<int> block_widths{16, 32, 64, 96, 128, 192};
    std::map<int, double> dropout_after{{3, 0.20}, {4, 0.30}, {5, 0.30}, {6, 0.40}};
    int head_channels = 64;
    int conv_k = 5; ///< square conv kernel edge (odd)

    static constexpr int kMaxBlocks = 6;

    /** @brief Canonical architecture for an input size: as many blocks as
     *         floor-halving pools allow (up to 6) with the canonical width
     *         prefix and the canonical dropout entries that still apply. */
    static NetworkSpec for_input(int h, int w, int c, int h_t);

    [[nodiscard]] int n_blocks() const { return static_cast<int>(block_widths.size()); }

    /** @brief Spatial size after `n_pools` floor-halvings of (in_h, in_w). */
    [[nodiscard]] std::pair<int, int> spatial_after(int n_pools) const;

    /** @brief Channel count entering block `i` (0-based). */
    [[nodiscard]] int in_width_of_block(int i) const {
        return i == 0 ? in_channels : block_widths[static_cast<std::size_t>(i) - 1];
    }

    void validate() const;
    [[nodiscard]] std::uint64_t digest() const;
    bool operator==(const NetworkSpec&) const = default;
};

/** @brief Parameter roles; the l2 penalty applies to Weight only. */
enum class ParamKind : std::uint8_t { Weight, Bias, BnScale, BnShift };

/** @brief Learnable state of one conv block plus its BN running statistics. */
template <typename T>
struct BlockParams {
    Tensor<T> w, b;                 // conv
    Tensor<T> gamma, beta;          // BN scale/shift
    Tensor<T> run_mean, run_var;    // BN running stats (not learnable)
};

/** @brief Execution mode: train uses batch BN stats and dropout, eval uses
 *         running stats and no dropout. */
enum class Mode : std::uint8_t { Train, Eval };

inline constexpr double kBnMomentum = 0.1;
inline constexpr double kBnEps = 1e-5;

/** @brief All learnable tensors plus BN running statistics.
 *
 *  The declared parameter order — per block (conv.w, conv.b, bn.gamma,
 *  bn.beta), then head conv, then the fully connected layer — is load-bearing:
 *  it fixes the initialization draw order, the checkpoint layout, and the
 *  Adam state alignment.
 */
template <typename T>
struct ModelParams {
    std::vector<BlockParams<T>> blocks;
    Tensor<T> head_w, head_b;
    Tensor<T> fc_w, fc_b;

    struct Ref {
        std::string name;
        Tensor<T>* tensor;
        ParamKind kind;
    };
    struct ConstRef {
        std::string name;
        const Tensor<T>* tensor;
        ParamKind kind;
    };

    /** @brief Learnable tensors in declared order. */
    [[nodiscard]] std::vector<Ref> param_refs() {
        std::vector<Ref> refs;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            const std::string p = "block" + std::to_string(i + 1);
            refs.push_back({p + ".conv.w", &blocks[i].w, ParamKind::Weight});
            refs.push_back({p + ".conv.b", &blocks[i].b, ParamKind::Bias});
            refs.push_back({p + ".bn.gamma", &blocks[i].gamma, ParamKind::BnScale});
            refs.push_back({p + ".bn.beta", &blocks[i].beta, ParamKind::BnShift});
        }
        refs.push_back({"head.conv.w", &head_w, ParamKind::Weight});
        refs.push_back({"head.conv.b", &head_b, ParamKind::Bias});
        refs.push_back({"fc.w", &fc_w, ParamKind::Weight});
        refs.push_back({"fc.b", &fc_b, ParamKind::Bias});
        return refs;
    }
    [[nodiscard]] std::vector<ConstRef> param_refs() const {
        auto& self = const_cast<ModelParams&>(*this);
        std::vector<ConstRef> refs;
        for (const auto& r : self.param_refs()) refs.push_back({r.name, r.tensor, r.kind});
        return refs;
    }

    /** @brief BN running statistics in declared order (not learnable). */
    [[nodiscard]] std::vector<Ref> stat_refs() {
        std::vector<Ref> refs;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            const std::string p = "block" + std::to_string(i + 1);
            refs.push_back({p + ".bn.run_mean", &blocks[i].run_mean, ParamKind::BnShift});
            refs.push_back({p + ".bn.run_var", &blocks[i].run_var, ParamKind::BnScale});
        }
        return refs;
    }
    [[nodiscard]] std::vector<ConstRef> stat_refs() const {
        auto& self = const_cast<ModelParams&>(*this);
        std::vector<ConstRef> refs;
        for (const auto& r : self.stat_refs()) refs.push_back({r.name, r.tensor, r.kind});
        return refs;
    }

    /** @brief Digest over every tensor (params and running stats). */
    [[nodiscard]] std::uint64_t content_digest() const {
        Fnv1a d;
        for (const auto& r : param_refs()) {
            d.update_string(r.name);
            r.tensor->update_digest(d);
        }
        for (const auto& r : stat_refs()) {
            d.update_string(r.name);
            r.tensor->update_digest(d);
        }
        return d.value();
    }
};

/** @brief Gradients aligned one-to-one with ModelParams::param_refs(). */
template <typename T>
struct Grads {
    struct BlockGrads {
        Tensor<T> w, b, gamma, beta;
    };
    std::vector<BlockGrads> blocks;
    Tensor<T> head_w, head_b;
    Tensor<T> fc_w, fc_b;

    [[nodiscard]] std::vector<Tensor<T>*> refs() {
        std::vector<Tensor<T>*> out;
        for (auto& bl : blocks) {
            out.push_back(&bl.w);
            out.push_back(&bl.b);
            out.push_back(&bl.gamma);
            out.push_back(&bl.beta);
        }
        out.push_back(&head_w);
        out.push_back(&head_b);
        out.push_back(&fc_w);
        out.push_back(&fc_b);
        return out;
    }
};

/** @brief Bias-corrected Adam optimizer state. The l2 coefficient is stored
 *         here for bookkeeping but consumed by loss_and_grad (the decay term
 *         is already inside the gradients); adam_step never re-applies it. */
template <typename T>
struct AdamState {
    std::vector<Tensor<T>> m, v; ///< aligned with ModelParams::param_refs()
    std::uint64_t step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double l2 = 1e-4;
};

/** @brief Loss value split into its data and penalty parts. */
struct LossValue {
    double total = 0.0; ///< ce + (l2/2) * sum of squared Weight-kind tensors
    double ce = 0.0;    ///< mean cross-entropy alone
};

/** @brief Preallocated activations, gradients, and scratch for one batch
 *         size. Reused across calls; rebuilt when the batch size changes. */
template <typename T>
struct Workspace {
    struct BlockWork {
        std::vector<T> cols, dcols;          // im2col unfold and its gradient
        Tensor<T> conv_out, d_conv_out;      // pre-BN
        Tensor<T> xhat;                      // BN-normalized (pre scale/shift)
        Tensor<T> bn_out, d_bn_out;          // post-BN (pre-ReLU)
        Tensor<T> relu_out, d_relu_out;      // post-ReLU (pool input)
        Tensor<T> pool_out, d_pool_out;      // post-pool
        std::vector<std::int64_t> pool_idx;
        Tensor<T> drop_mask;                 // dropout scale per element (if any)
        BnCache bn_cache;
        bool has_dropout = false;
        double dropout_rate = 0.0;
    };

    int batch = 0;
    Tensor<T> x0;                       // standardized input
    std::vector<BlockWork> blocks;
    Tensor<T> head_out, d_head_out;     // 1x1 conv output
    Tensor<T> head_relu, d_head_relu;
    Tensor<T> gap_out, d_gap_out;
    Tensor<T> logits, d_logits;
    Tensor<T> probs;
    std::vector<T> gemm_scratch;

    /** @brief Allocate (or reallocate) every buffer for batch size b. */
    void ensure(const NetworkSpec& spec, int b);
};

template <typename T>
void Workspace<T>::ensure(const NetworkSpec& spec, int b) {
    if (batch == b && static_cast<int>(blocks.size()) == spec.n_blocks()) return;
    batch = b;
    x0 = Tensor<T>(b, spec.in_h, spec.in_w, spec.in_channels);
    blocks.assign(static_cast<std::size_t>(spec.n_blocks()), BlockWork{});
    int hh = spec.in_h, ww = spec.in_w;
    for (int i = 0; i < spec.n_blocks(); ++i) {
        BlockWork& bw = blocks[static_cast<std::size_t>(i)];
        const int cout = spec.block_widths[static_cast<std::size_t>(i)];
        bw.conv_out = Tensor<T>(b, hh, ww, cout);
        bw.d_conv_out = Tensor<T>(b, hh, ww, cout);
        bw.xhat = Tensor<T>(b, hh, ww, cout);
        bw.bn_out = Tensor<T>(b, hh, ww, cout);
        bw.d_bn_out = Tensor<T>(b, hh, ww, cout);
        bw.relu_out = Tensor<T>(b, hh, ww, cout);
        bw.d_relu_out = Tensor<T>(b, hh, ww, cout);
        hh /= 2;
        ww /= 2;
        bw.pool_out = Tensor<T>(b, hh, ww, cout);
        bw.d_pool_out = Tensor<T>(b, hh, ww, cout);
        const auto it = spec.dropout_after.find(i + 1);
        bw.has_dropout = it != spec.dropout_after.end();
        bw.dropout_rate = bw.has_dropout ? it->second : 0.0;
        if (bw.has_dropout) {
            bw.drop_mask = Tensor<T>(b, hh, ww, cout);
        }
    }
    head_out = Tensor<T>(b, hh, ww, spec.head_channels);
    d_head_out = Tensor<T>(b, hh, ww, spec.head_channels);
    head_relu = Tensor<T>(b, hh, ww, spec.head_channels);
    d_head_relu = Tensor<T>(b, hh, ww, spec.head_channels);
    gap_out = Tensor<T>(b, 1, 1, spec.head_channels);
    d_gap_out = Tensor<T>(b, 1, 1, spec.head_channels);
    logits = Tensor<T>(b, 1, 1, spec.h_t);
    d_logits = Tensor<T>(b, 1, 1, spec.h_t);
    probs = Tensor<T>(b, 1, 1, spec.h_t);
}

/** @brief The count-classifier network: initialization, forward in train or
 *         eval mode, fused loss/gradient, and prediction. */
template <typename T>
class Network {
public:
    explicit Network(NetworkSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

    [[nodiscard]] const NetworkSpec& spec() const { return spec_; }

    /** @brief He (fan-in) initialization: weights ~ N(0, sqrt(2/fan_in)),
     *         biases and BN shifts 0, BN scales 1, running stats (0, 1).
     *         Draw order is the declared parameter order. */
    [[nodiscard]] ModelParams<T> init_params(RandomSource& rng) const {
        ModelParams<T> p = make_zero_params();
        for (auto& ref : p.param_refs()) {
            if (ref.kind == ParamKind::Weight) {
                const int fan_in = ref.tensor->dim(0) * ref.tensor->dim(1) * ref.tensor->dim(2);
                fill_normal(*ref.tensor, std::sqrt(2.0 / fan_in), rng);
            } else if (ref.kind == ParamKind::BnScale) {
                ref.tensor->fill(T{1});
            }
        }
        for (auto& ref : p.stat_refs()) {
            if (ref.name.ends_with("run_var")) ref.tensor->fill(T{1});
        }
        return p;
    }

    /** @brief Zero-shaped parameter set (used by init, checkpoints, Adam). */
    [[nodiscard]] ModelParams<T> make_zero_params() const {
        ModelParams<T> p;
        for (int i = 0; i < spec_.n_blocks(); ++i) {
            const int cin = spec_.in_width_of_block(i);
            const int cout = spec_.block_widths[static_cast<std::size_t>(i)];
            BlockParams<T> bp;
            bp.w = Tensor<T>(spec_.conv_k, spec_.conv_k, cin, cout);
            bp.b = Tensor<T>::per_channel(cout);
            bp.gamma = Tensor<T>::per_channel(cout);
            bp.beta = Tensor<T>::per_channel(cout);
            bp.run_mean = Tensor<T>::per_channel(cout);
            bp.run_var = Tensor<T>::per_channel(cout);
            p.blocks.push_back(std::move(bp));
        }
        const int last_w = spec_.block_widths.back();
        p.head_w = Tensor<T>(1, 1, last_w, spec_.head_channels);
        p.head_b = Tensor<T>::per_channel(spec_.head_channels);
        p.fc_w = Tensor<T>(1, 1, spec_.head_channels, spec_.h_t);
        p.fc_b = Tensor<T>::per_channel(spec_.h_t);
        return p;
    }

    [[nodiscard]] Grads<T> make_zero_grads() const {
        Grads<T> g;
        ModelParams<T> shape = make_zero_params();
        for (auto& bp : shape.blocks) {
            typename Grads<T>::BlockGrads bg;
            bg.w = bp.w;
            bg.b = bp.b;
            bg.gamma = bp.gamma;
            bg.beta = bp.beta;
            g.blocks.push_back(std::move(bg));
        }
        g.head_w = shape.head_w;
        g.head_b = shape.head_b;
        g.fc_w = shape.fc_w;
        g.fc_b = shape.fc_b;
        return g;
    }

    [[nodiscard]] AdamState<T> make_adam_state(double lr, double l2) const {
        AdamState<T> s;
        s.lr = lr;
        s.l2 = l2;
        ModelParams<T> shape = make_zero_params();
        for (auto& ref : shape.param_refs()) {
            s.m.push_back(*ref.tensor);
            s.v.push_back(*ref.tensor);
        }
        return s;
    }

    /** @brief Train-mode forward (updates BN running stats, applies dropout
     *         using rng). Activations land in ws; probabilities in ws.probs. */
    void forward_train(ModelParams<T>& params, const Tensor<T>& x_raw, RandomSource& rng,
                       Workspace<T>& ws) const {
        forward_impl(params, x_raw, Mode::Train, &rng, ws);
    }

    /** @brief Eval-mode forward: deterministic, running BN stats, no dropout,
     *         params untouched. */
    void forward_eval(const ModelParams<T>& params, const Tensor<T>& x_raw,
                      Workspace<T>& ws) const {
        forward_impl(const_cast<ModelParams<T>&>(params), x_raw, Mode::Eval, nullptr, ws);
    }

    /** @brief Train-mode forward + exact analytic backward.
     *
     *  loss.total = mean cross-entropy + (l2/2) * sum ||w||^2 over conv/FC
     *  weights (biases and BN parameters excluded); grads are the exact
     *  gradients of that total, overwritten in place.
     */
    LossValue loss_and_grad(ModelParams<T>& params, const Tensor<T>& x_raw,
                            const std::vector<int>& labels_1based, double l2,
                            RandomSource& dropout_rng, Workspace<T>& ws, Grads<T>& grads) const {
        forward_impl(params, x_raw, Mode::Train, &dropout_rng, ws);

        std::vector<int> labels0(labels_1based.size());
        for (std::size_t i = 0; i < labels_1based.size(); ++i) {
            const int k = labels_1based[i];
            if (k < 1 || k > spec_.h_t) {
                throw DomainError("loss_and_grad: label " + std::to_string(k) +
                                  " outside [1, " + std::to_string(spec_.h_t) + "]");
            }
            labels0[i] = k - 1;
        }

        LossValue loss;
        loss.ce = softmax_cross_entropy(ws.logits, labels0, ws.probs, &ws.d_logits);
        loss.total = loss.ce;

        backward_impl(params, ws, grads);

        // l2 penalty on Weight-kind tensors; gradient contribution l2 * w.
        if (l2 > 0) {
            auto prefs = params.param_refs();
            auto grefs = grads.refs();
            double penalty = 0.0;
            for (std::size_t i = 0; i < prefs.size(); ++i) {
                if (prefs[i].kind != ParamKind::Weight) continue;
                const T* wv = prefs[i].tensor->data();
                T* gv = grefs[i]->data();
                const std::size_t n = prefs[i].tensor->size();
                for (std::size_t j = 0; j < n; ++j) {
                    penalty += static_cast<double>(wv[j]) * wv[j];
                    gv[j] += static_cast<T>(l2 * wv[j]);
                }
            }
            loss.total += 0.5 * l2 * penalty;
        }
        return loss;
    }

    /** @brief Class predictions (counts in [1, h_t]) for the batch already
     *         forwarded into ws; ties resolve to the smaller count. */
    void predict_from_probs(const Workspace<T>& ws, int* out) const {
        const int b_n = ws.probs.n(), cc = ws.probs.c();
        for (int b = 0; b < b_n; ++b) {
            const T* p = ws.probs.data() + static_cast<std::size_t>(b) * cc;
            int best = 0;
            for (int ch = 1; ch < cc; ++ch) {
                if (p[ch] > p[best]) best = ch; // strict: first max wins
            }
            out[b] = best + 1;
        }
    }

private:
    void forward_impl(ModelParams<T>& params, const Tensor<T>& x_raw, Mode mode,
                      RandomSource* rng, Workspace<T>& ws) const {
        if (x_raw.h() != spec_.in_h || x_raw.w() != spec_.in_w ||
            x_raw.c() != spec_.in_channels) {
            throw DomainError("forward: input shape mismatch");
        }
        ws.ensure(spec_, x_raw.n());
        ws.x0 = x_raw;
        zscore_inplace(ws.x0);

        const Tensor<T>* cur = &ws.x0;
        for (int i = 0; i < spec_.n_blocks(); ++i) {
            auto& bw = ws.blocks[static_cast<std::size_t>(i)];
            auto& bp = params.blocks[static_cast<std::size_t>(i)];
            conv2d_forward(*cur, bp.w, bp.b, bw.conv_out, bw.cols);
            if (mode == Mode::Train) {
                bn_forward_train(bw.conv_out, bp.gamma, bp.beta, kBnMomentum, kBnEps, bw.bn_out,
                                 bw.xhat, bp.run_mean, bp.run_var, bw.bn_cache);
            } else {
                bn_forward_eval(bw.conv_out, bp.gamma, bp.beta, bp.run_mean, bp.run_var, kBnEps,
                                bw.bn_out);
            }
            relu_forward(bw.bn_out, bw.relu_out);
            maxpool2x2_forward(bw.relu_out, bw.pool_out, bw.pool_idx);
            if (bw.has_dropout && mode == Mode::Train) {
                dropout_forward_train(bw.pool_out, bw.dropout_rate, *rng, bw.pool_out,
                                      bw.drop_mask);
            }
            cur = &bw.pool_out;
        }

        conv2d_forward(*cur, params.head_w, params.head_b, ws.head_out, ws.gemm_scratch);
        relu_forward(ws.head_out, ws.head_relu);
        gap_forward(ws.head_relu, ws.gap_out);
        dense_forward(ws.gap_out, params.fc_w, params.fc_b, ws.logits);
        softmax(ws.logits, ws.probs);
    }

    void backward_impl(ModelParams<T>& params, Workspace<T>& ws, Grads<T>& grads) const {
        dense_backward(ws.gap_out, params.fc_w, ws.d_logits, grads.fc_w, grads.fc_b,
                       ws.d_gap_out, ws.gemm_scratch);
        gap_backward(ws.d_gap_out, ws.d_head_relu);
        relu_backward(ws.head_out, ws.d_head_relu, ws.d_head_out);

        const int last = spec_.n_blocks() - 1;
        auto& last_bw = ws.blocks[static_cast<std::size_t>(last)];
        std::vector<T> unused_cols; // head conv is 1x1: unfold not used
        conv2d_backward(last_bw.pool_out, params.head_w, ws.d_head_out, grads.head_w,
                        grads.head_b, &last_bw.d_pool_out, unused_cols, unused_cols,
                        ws.gemm_scratch);

        for (int i = last; i >= 0; --i) {
            auto& bw = ws.blocks[static_cast<std::size_t>(i)];
            auto& bp = params.blocks[static_cast<std::size_t>(i)];
            auto& bg = grads.blocks[static_cast<std::size_t>(i)];
            if (bw.has_dropout) {
                dropout_backward(bw.drop_mask, bw.d_pool_out, bw.d_pool_out);
            }
            maxpool2x2_backward(bw.pool_idx, bw.d_pool_out, bw.d_relu_out);
            relu_backward(bw.bn_out, bw.d_relu_out, bw.d_bn_out);
            bn_backward(bw.xhat, bp.gamma, bw.d_bn_out, bw.bn_cache, bg.gamma, bg.beta,
                        bw.d_conv_out);
            const Tensor<T>& block_in =
                i == 0 ? ws.x0 : ws.blocks[static_cast<std::size_t>(i) - 1].pool_out;
            Tensor<T>* dx =
                i == 0 ? nullptr : &ws.blocks[static_cast<std::size_t>(i) - 1].d_pool_out;
            conv2d_backward(block_in, bp.w, bw.d_conv_out, bg.w, bg.b, dx, bw.cols, bw.dcols,
                            ws.gemm_scratch);
        }
    }

    static void fill_normal(Tensor<T>& t, double stddev, RandomSource& rng) {
        T* p = t.data();
        const std::size_t n = t.size();
        std::size_t i = 0;
        for (; i + 1 < n; i += 2) {
            const auto [a, b] = rng.normal_pair();
            p[i] = static_cast<T>(a * stddev);
            p[i + 1] = static_cast<T>(b * stddev);
        }
        if (i < n) {
            const auto [a, b] = rng.normal_pair(); // second draw discarded
            (void)b;
            p[i] = static_cast<T>(a * stddev);
        }
    }

    NetworkSpec spec_;
};

/** @brief One bias-corrected Adam update; the step counter increments first
 *         so corrections use t = 1 on the first call. Gradients must already
 *         include any l2 term (see AdamState). */
template <typename T>
void adam_step(AdamState<T>& state, ModelParams<T>& params, Grads<T>& grads) {
    auto prefs = params.param_refs();
    auto grefs = grads.refs();
    if (prefs.size() != state.m.size() || prefs.size() != grefs.size()) {
        throw DomainError("adam_step: state misaligned with parameters");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < prefs.size(); ++i) {
        T* w = prefs[i].tensor->data();
        const T* g = grefs[i]->data();
        T* m = state.m[i].data();
        T* v = state.v[i].data();
        const std::size_t n = prefs[i].tensor->size();
        for (std::size_t j = 0; j < n; ++j) {
            const double gj = g[j];
            const double mj = state.beta1 * m[j] + (1.0 - state.beta1) * gj;
            const double vj = state.beta2 * v[j] + (1.0 - state.beta2) * gj * gj;
            m[j] = static_cast<T>(mj);
            v[j] = static_cast<T>(vj);
            const double mhat = mj / bc1;
            const double vhat = vj / bc2;
            w[j] = static_cast<T>(w[j] - state.lr * mhat / (std::sqrt(vhat) + state.eps));
        }
    }
}

/** @brief Single-input convenience prediction from an RdInput; ties resolve
 *         toward the smaller count. */
int predict_count(const NetworkSpec& spec, const ModelParams<float>& params,
                  const RdInput& input);

} // namespace rdcount
