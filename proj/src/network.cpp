#include "rdcount/network.hpp"

#include <algorithm>
#include <string>

namespace rdcount {

namespace {

const std::vector<int> kCanonicalWidths{16, 32, 64, 96, 128, 192};
const std::map<int, double> kCanonicalDropout{{3, 0.20}, {4, 0.30}, {5, 0.30}, {6, 0.40}};

} // namespace

NetworkSpec NetworkSpec::for_input(int h, int w, int c, int h_t) {
    NetworkSpec spec;
    spec.in_h = h;
    spec.in_w = w;
    spec.in_channels = c;
    spec.h_t = h_t;
    // As many 2x2 floor-halving pools as keep both spatial dims >= 1.
    int n_blocks = 0;
    int hh = h, ww = w;
    while (n_blocks < kMaxBlocks && hh / 2 >= 1 && ww / 2 >= 1) {
        hh /= 2;
        ww /= 2;
        ++n_blocks;
    }
    spec.block_widths.assign(kCanonicalWidths.begin(), kCanonicalWidths.begin() + n_blocks);
    spec.dropout_after.clear();
    for (const auto& [after, rate] : kCanonicalDropout) {
        if (after <= n_blocks) spec.dropout_after.emplace(after, rate);
    }
    spec.validate();
    return spec;
}

std::pair<int, int> NetworkSpec::spatial_after(int n_pools) const {
    int hh = in_h, ww = in_w;
    for (int i = 0; i < n_pools; ++i) {
        hh /= 2;
        ww /= 2;
    }
    return {hh, ww};
}

void NetworkSpec::validate() const {
    if (in_h < 1 || in_w < 1 || in_channels < 1) {
        throw ConfigError("network: input dimensions must be positive");
    }
    if (h_t < 1) throw ConfigError("network: h_t must be >= 1");
    if (block_widths.empty()) throw ConfigError("network: at least one block required");
    if (n_blocks() > kMaxBlocks) {
        throw ConfigError("network: at most " + std::to_string(kMaxBlocks) + " blocks");
    }
    for (int w : block_widths) {
        if (w < 1) throw ConfigError("network: block widths must be positive");
    }
    if (head_channels < 1) throw ConfigError("network: head_channels must be >= 1");
    if (conv_k < 1 || conv_k % 2 == 0) {
        throw ConfigError("network: conv kernel must be odd and positive");
    }
    const auto [hh, ww] = spatial_after(n_blocks());
    if (hh < 1 || ww < 1) {
        throw ConfigError("network: too many pools for input " + std::to_string(in_h) + "x" +
                          std::to_string(in_w));
    }
    for (const auto& [after, rate] : dropout_after) {
        if (after < 1 || after > n_blocks()) {
            throw ConfigError("network: dropout after block " + std::to_string(after) +
                              " out of range");
        }
        if (!(rate >= 0.0 && rate < 1.0)) {
            throw ConfigError("network: dropout rate must be in [0, 1)");
        }
    }
}

std::uint64_t NetworkSpec::digest() const {
    Fnv1a d;
    d.update_value(in_h);
    d.update_value(in_w);
    d.update_value(in_channels);
    d.update_value(h_t);
    d.update_value(static_cast<std::uint64_t>(block_widths.size()));
    for (int w : block_widths) d.update_value(w);
    d.update_value(static_cast<std::uint64_t>(dropout_after.size()));
    for (const auto& [after, rate] : dropout_after) {
        d.update_value(after);
        d.update_value(rate);
    }
    d.update_value(head_channels);
    d.update_value(conv_k);
    return d.value();
}

int predict_count(const NetworkSpec& spec, const ModelParams<float>& params,
                  const RdInput& input) {
    const int ch = static_cast<int>(input.channels.size());
    if (ch != spec.in_channels) {
        throw DomainError("predict_count: channel count mismatch");
    }
    const int rows = input.channels.front().rows();
    const int cols = input.channels.front().cols();
    Tensor<float> x(1, rows, cols, ch);
    for (int c = 0; c < ch; ++c) {
        const RealMat& plane = input.channels[static_cast<std::size_t>(c)];
        for (int r = 0; r < rows; ++r) {
            for (int cc = 0; cc < cols; ++cc) {
                x(0, r, cc, c) = static_cast<float>(plane(r, cc));
            }
        }
    }
    Network<float> net(spec);
    Workspace<float> ws;
    net.forward_eval(params, x, ws);
    int out = 0;
    net.predict_from_probs(ws, &out);
    return out;
}

} // namespace rdcount
