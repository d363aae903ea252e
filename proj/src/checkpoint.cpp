#include "rdcount/checkpoint.hpp"

#include "rdcount/binio.hpp"
#include "rdcount/errors.hpp"

#include <istream>

namespace rdcount {

namespace {

constexpr std::uint32_t kCkptMagic = 0x4B434452u; // "RDCK" little-endian
constexpr std::uint32_t kCkptVersion = 1;
constexpr std::uint8_t kPrecisionF32 = 4;

void write_spec(BinWriter& w, const NetworkSpec& spec) {
    w.write_u32(static_cast<std::uint32_t>(spec.in_h));
    w.write_u32(static_cast<std::uint32_t>(spec.in_w));
    w.write_u32(static_cast<std::uint32_t>(spec.in_channels));
    w.write_u32(static_cast<std::uint32_t>(spec.h_t));
    w.write_u32(static_cast<std::uint32_t>(spec.block_widths.size()));
    for (int bw : spec.block_widths) w.write_u32(static_cast<std::uint32_t>(bw));
    w.write_u32(static_cast<std::uint32_t>(spec.dropout_after.size()));
    for (const auto& [after, rate] : spec.dropout_after) {
        w.write_u32(static_cast<std::uint32_t>(after));
        w.write_f64(rate);
    }
    w.write_u32(static_cast<std::uint32_t>(spec.head_channels));
    w.write_u32(static_cast<std::uint32_t>(spec.conv_k));
}

NetworkSpec read_spec(BinReader& r) {
    NetworkSpec spec;
    spec.in_h = static_cast<int>(r.read_u32());
    spec.in_w = static_cast<int>(r.read_u32());
    spec.in_channels = static_cast<int>(r.read_u32());
    spec.h_t = static_cast<int>(r.read_u32());
    const std::uint32_t n_blocks = r.read_u32();
    if (n_blocks < 1 || n_blocks > 64) {
        throw FormatError("checkpoint: implausible block count");
    }
    spec.block_widths.clear();
    for (std::uint32_t i = 0; i < n_blocks; ++i) {
        spec.block_widths.push_back(static_cast<int>(r.read_u32()));
    }
    const std::uint32_t n_drop = r.read_u32();
    if (n_drop > n_blocks) throw FormatError("checkpoint: implausible dropout count");
    spec.dropout_after.clear();
    for (std::uint32_t i = 0; i < n_drop; ++i) {
        const int after = static_cast<int>(r.read_u32());
        spec.dropout_after[after] = r.read_f64();
    }
    spec.head_channels = static_cast<int>(r.read_u32());
    spec.conv_k = static_cast<int>(r.read_u32());
    try {
        spec.validate();
    } catch (const ConfigError& e) {
        throw FormatError(std::string("checkpoint: invalid architecture: ") + e.what());
    }
    return spec;
}

void write_history(BinWriter& w, const std::vector<EpochRecord>& history) {
    w.write_u32(static_cast<std::uint32_t>(history.size()));
    for (const auto& rec : history) {
        w.write_u32(static_cast<std::uint32_t>(rec.epoch));
        w.write_f64(rec.train_ce);
        w.write_f64(rec.val_ce);
        w.write_f64(rec.val_mse);
        w.write_f64(rec.seconds);
    }
}

std::vector<EpochRecord> read_history(BinReader& r) {
    const std::uint32_t n = r.read_u32();
    if (n > 1u << 20) throw FormatError("checkpoint: implausible history length");
    std::vector<EpochRecord> history(n);
    for (auto& rec : history) {
        rec.epoch = static_cast<int>(r.read_u32());
        rec.train_ce = r.read_f64();
        rec.val_ce = r.read_f64();
        rec.val_mse = r.read_f64();
        rec.seconds = r.read_f64();
    }
    return history;
}

void write_tensor(BinWriter& w, const std::string& name, const Tensor<float>& t) {
    w.write_string(name);
    for (int i = 0; i < 4; ++i) w.write_u32(static_cast<std::uint32_t>(t.dim(i)));
    w.write_bytes(t.data(), t.size() * sizeof(float));
}

void read_tensor_into(BinReader& r, const std::string& expect_name, Tensor<float>& t) {
    const std::string name = r.read_string();
    if (name != expect_name) {
        throw FormatError("checkpoint: expected tensor '" + expect_name + "', found '" + name +
                          "'");
    }
    for (int i = 0; i < 4; ++i) {
        const auto d = static_cast<int>(r.read_u32());
        if (d != t.dim(i)) {
            throw FormatError("checkpoint: tensor '" + name + "' dim " + std::to_string(i) +
                              " is " + std::to_string(d) + ", expected " +
                              std::to_string(t.dim(i)));
        }
    }
    r.read_bytes(t.data(), t.size() * sizeof(float));
}

CheckpointMeta read_meta_fields(BinReader& r, const std::filesystem::path& path) {
    const std::uint32_t magic = r.read_u32();
    if (magic != kCkptMagic) {
        throw FormatError("checkpoint " + path.string() + ": bad magic");
    }
    const std::uint32_t version = r.read_u32();
    if (version != kCkptVersion) {
        throw FormatError("checkpoint " + path.string() + ": unsupported version " +
                          std::to_string(version));
    }
    const std::uint8_t precision = r.read_u8();
    if (precision != kPrecisionF32) {
        throw FormatError("checkpoint " + path.string() + ": unsupported precision");
    }
    CheckpointMeta meta;
    meta.config_digest = r.read_u64();
    meta.seed = r.read_u64();
    meta.tag = r.read_string(256);
    meta.epoch = static_cast<int>(r.read_u32());
    meta.spec = read_spec(r);
    meta.history = read_history(r);
    return meta;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    AtomicFile file(path);
    BinWriter w(file.stream());
    w.write_u32(kCkptMagic);
    w.write_u32(kCkptVersion);
    w.write_u8(kPrecisionF32);
    w.write_u64(ckpt.config_digest);
    w.write_u64(ckpt.seed);
    w.write_string(ckpt.tag);
    w.write_u32(static_cast<std::uint32_t>(ckpt.epoch));
    write_spec(w, ckpt.spec);
    write_history(w, ckpt.history);

    auto& params = const_cast<ModelParams<float>&>(ckpt.params);
    auto prefs = params.param_refs();
    auto srefs = params.stat_refs();
    w.write_u32(static_cast<std::uint32_t>(prefs.size() + srefs.size()));
    for (const auto& ref : prefs) write_tensor(w, ref.name, *ref.tensor);
    for (const auto& ref : srefs) write_tensor(w, ref.name, *ref.tensor);

    w.write_u8(ckpt.has_adam ? 1 : 0);
    if (ckpt.has_adam) {
        w.write_u64(ckpt.adam.step);
        w.write_f64(ckpt.adam.lr);
        w.write_f64(ckpt.adam.beta1);
        w.write_f64(ckpt.adam.beta2);
        w.write_f64(ckpt.adam.eps);
        w.write_f64(ckpt.adam.l2);
        for (std::size_t i = 0; i < prefs.size(); ++i) {
            write_tensor(w, prefs[i].name + ".m", ckpt.adam.m[i]);
        }
        for (std::size_t i = 0; i < prefs.size(); ++i) {
            write_tensor(w, prefs[i].name + ".v", ckpt.adam.v[i]);
        }
    }
    w.write_u64(w.digest());
    file.commit();
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in = open_for_read(path);
    BinReader r(in, path.string());
    const CheckpointMeta meta = read_meta_fields(r, path);

    Checkpoint ckpt;
    ckpt.spec = meta.spec;
    ckpt.tag = meta.tag;
    ckpt.epoch = meta.epoch;
    ckpt.config_digest = meta.config_digest;
    ckpt.seed = meta.seed;
    ckpt.history = meta.history;

    Network<float> net(ckpt.spec);
    ckpt.params = net.make_zero_params();
    auto prefs = ckpt.params.param_refs();
    auto srefs = ckpt.params.stat_refs();
    const std::uint32_t n_tensors = r.read_u32();
    if (n_tensors != prefs.size() + srefs.size()) {
        throw FormatError("checkpoint " + path.string() + ": tensor count " +
                          std::to_string(n_tensors) + " does not match architecture");
    }
    for (auto& ref : prefs) read_tensor_into(r, ref.name, *ref.tensor);
    for (auto& ref : srefs) read_tensor_into(r, ref.name, *ref.tensor);

    ckpt.has_adam = r.read_u8() != 0;
    if (ckpt.has_adam) {
        ckpt.adam = net.make_adam_state(1e-3, 0.0);
        ckpt.adam.step = r.read_u64();
        ckpt.adam.lr = r.read_f64();
        ckpt.adam.beta1 = r.read_f64();
        ckpt.adam.beta2 = r.read_f64();
        ckpt.adam.eps = r.read_f64();
        ckpt.adam.l2 = r.read_f64();
        for (std::size_t i = 0; i < prefs.size(); ++i) {
            read_tensor_into(r, prefs[i].name + ".m", ckpt.adam.m[i]);
        }
        for (std::size_t i = 0; i < prefs.size(); ++i) {
            read_tensor_into(r, prefs[i].name + ".v", ckpt.adam.v[i]);
        }
    }
    const std::uint64_t expect = r.digest();
    const std::uint64_t trailer = r.read_u64();
    if (trailer != expect) {
        throw FormatError("checkpoint " + path.string() + ": digest mismatch (corrupt file)");
    }
    if (in.peek() != std::ifstream::traits_type::eof()) {
        throw FormatError("checkpoint " + path.string() + ": trailing bytes after digest");
    }
    return ckpt;
}

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path) {
    std::ifstream in = open_for_read(path);
    BinReader r(in, path.string());
    return read_meta_fields(r, path);
}

} // namespace rdcount
