#include "rdcount/config.hpp"

#include "rdcount/binio.hpp"
#include "rdcount/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdlib>
#include <optional>
#include <set>

namespace rdcount {

namespace {

using nlohmann::json;

/** @brief Fail-closed view of a JSON object: every key must be consumed by
 *         the schema, and done() rejects leftovers by full path. */
class ObjView {
public:
    ObjView(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) {
            throw ConfigError("config: '" + path_ + "' must be a JSON object");
        }
    }

    [[nodiscard]] bool has(const char* key) const { return j_.contains(key); }

    template <typename T>
    std::optional<T> maybe(const char* key) {
        if (!j_.contains(key)) return std::nullopt;
        used_.insert(key);
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("config: key '" + full(key) + "': " + e.what());
        }
    }

    template <typename T>
    void read_into(const char* key, T& out) {
        if (auto v = maybe<T>(key)) out = *v;
    }

    [[nodiscard]] const json* raw(const char* key) {
        if (!j_.contains(key)) return nullptr;
        used_.insert(key);
        return &j_.at(key);
    }

    [[nodiscard]] std::string full(const char* key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    void done() const {
        std::vector<std::string> unknown;
        for (const auto& [key, value] : j_.items()) {
            if (!used_.contains(key)) unknown.push_back(full(key.c_str()));
        }
        if (!unknown.empty()) {
            std::string msg = "config: unknown key(s):";
            for (const auto& k : unknown) msg += " '" + k + "'";
            throw ConfigError(msg);
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

WindowKind parse_window_kind(const std::string& s, const std::string& where) {
    if (s == "rect" || s == "rectangular") return WindowKind::Rectangular;
    if (s == "hann") return WindowKind::Hann;
    if (s == "chebyshev" || s == "dolph-chebyshev") return WindowKind::DolphChebyshev;
    throw ConfigError("config: " + where + ": unknown window kind '" + s +
                      "' (expected rect|hann|chebyshev)");
}

std::vector<WindowSpec> parse_windows(const json& arr, const std::string& where) {
    if (!arr.is_array() || arr.empty()) {
        throw ConfigError("config: '" + where + "' must be a non-empty array");
    }
    std::vector<WindowSpec> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string slot = where + "[" + std::to_string(i) + "]";
        const json& e = arr.at(i);
        WindowSpec spec;
        if (e.is_string()) {
            spec.kind = parse_window_kind(e.get<std::string>(), slot);
            // canonical parameter so equal windows always digest equally
            spec.attenuation_db = spec.kind == WindowKind::DolphChebyshev ? 60.0 : 0.0;
        } else if (e.is_object()) {
            ObjView v(e, slot);
            std::string kind;
            if (auto k = v.maybe<std::string>("kind")) {
                kind = *k;
            } else {
                throw ConfigError("config: '" + slot + "' needs a 'kind'");
            }
            spec.kind = parse_window_kind(kind, slot);
            spec.attenuation_db = spec.kind == WindowKind::DolphChebyshev ? 60.0 : 0.0;
            if (auto att = v.maybe<double>("attenuation_db")) {
                if (spec.kind != WindowKind::DolphChebyshev) {
                    throw ConfigError("config: '" + slot +
                                      "': attenuation_db applies to chebyshev only");
                }
                spec.attenuation_db = *att;
            }
            v.done();
        } else {
            throw ConfigError("config: '" + slot + "' must be a string or object");
        }
        out.push_back(spec);
    }
    return out;
}

Scale parse_scale(const std::string& s) {
    if (s == "db" || s == "decibel") return Scale::Decibel;
    if (s == "linear") return Scale::Linear;
    throw ConfigError("config: scale must be 'db' or 'linear', got '" + s + "'");
}

void apply_profile(ExperimentConfig& cfg, const std::string& profile) {
    if (profile == "full") return; // struct defaults are the full profile
    if (profile != "desk") {
        throw ConfigError("config: profile must be 'full' or 'desk', got '" + profile + "'");
    }
    cfg.ofdm.n_fft = 512;
    cfg.ofdm.n_use = 160;
    cfg.ofdm.m_symbols = 32;
    cfg.ofdm.m_per = 64;
    cfg.ofdm.delta_f = 120e3;
    cfg.ofdm.t_cp = (1.0 / 120e3) / 8.0;
    cfg.ofdm.crop_rows = 48;
    cfg.ofdm.crop_cols = 48;
    cfg.h_t = 6;
    cfg.gen.k_max = 6;
    cfg.gen.d_max = 80.0;
    cfg.n_train = 4000;
    cfg.n_val = 1000;
    cfg.train.epochs = 12;
}

} // namespace

int model_channel_select(const std::string& model_tag) {
    if (model_tag == "dual") return -1;
    if (model_tag == "single_rect") return 0;
    if (model_tag == "single_hann") return 1;
    throw ConfigError("unknown model tag '" + model_tag +
                      "' (expected single_rect|single_hann|dual)");
}

const std::vector<std::string>& model_tags() {
    static const std::vector<std::string> tags{"single_rect", "single_hann", "dual"};
    return tags;
}

void ExperimentConfig::validate() const {
    if (profile != "full" && profile != "desk") {
        throw ConfigError("config: profile must be 'full' or 'desk'");
    }
    ofdm.validate();
    gen.validate(ofdm);
    if (h_t < 1) throw ConfigError("config: h_t must be >= 1");
    if (gen.k_max > h_t) {
        throw ConfigError("config: k_max=" + std::to_string(gen.k_max) +
                          " exceeds h_t=" + std::to_string(h_t));
    }
    if (windows.empty() || windows.size() > 2) {
        throw ConfigError("config: windows must list 1 or 2 windows");
    }
    if (windows[0].kind != WindowKind::Rectangular) {
        throw ConfigError("config: windows[0] must be the rectangular window");
    }
    if (windows.size() == 2 && windows[1].kind == WindowKind::Rectangular) {
        throw ConfigError("config: windows[1] must be a low-sidelobe window (hann|chebyshev)");
    }
    if (n_train < 1 || n_val < 1) {
        throw ConfigError("config: n_train and n_val must be >= 1");
    }
    train.validate();
    if (eval.n_trials < 1) throw ConfigError("config: eval.n_trials must be >= 1");
    if (eval.snr_grid.empty()) throw ConfigError("config: eval.snr_grid must not be empty");
    if (eval.k_grid.empty()) throw ConfigError("config: eval.k_grid must not be empty");
    for (int k : eval.k_grid) {
        if (k < 1 || k > h_t) {
            throw ConfigError("config: eval.k_grid entry " + std::to_string(k) +
                              " outside [1, h_t=" + std::to_string(h_t) + "]");
        }
    }
    if (!default_model.empty()) (void)model_channel_select(default_model);
}

std::uint64_t ExperimentConfig::data_digest() const {
    Fnv1a d;
    ofdm.update_digest(d);
    gen.update_digest(d);
    d.update_value(static_cast<std::uint64_t>(windows.size()));
    for (const auto& w : windows) w.update_digest(d);
    d.update_value(static_cast<std::uint8_t>(scale));
    d.update_value(n_train);
    d.update_value(n_val);
    d.update_value(seed);
    return d.value();
}

std::uint64_t ExperimentConfig::model_digest(const std::string& model_tag,
                                             std::uint64_t effective_seed) const {
    Fnv1a d;
    d.update_value(data_digest());
    d.update_value(h_t);
    d.update_value(network_for(model_tag).digest());
    train.update_digest(d);
    d.update_string(model_tag);
    d.update_value(effective_seed);
    return d.value();
}

DatasetBuildSpec ExperimentConfig::train_build_spec() const {
    DatasetBuildSpec spec;
    spec.ofdm = ofdm;
    spec.gen = gen;
    spec.windows = windows;
    spec.scale = scale;
    spec.n_samples = n_train;
    spec.seed = seed;
    spec.stream = SeedStream::TrainData;
    return spec;
}

DatasetBuildSpec ExperimentConfig::val_build_spec() const {
    DatasetBuildSpec spec = train_build_spec();
    spec.n_samples = n_val;
    spec.stream = SeedStream::ValData;
    return spec;
}

NetworkSpec ExperimentConfig::network_for(const std::string& model_tag) const {
    const int select = model_channel_select(model_tag);
    if (select >= static_cast<int>(windows.size())) {
        throw ConfigError("config: model '" + model_tag + "' needs window channel " +
                          std::to_string(select) + " but only " +
                          std::to_string(windows.size()) + " window(s) configured");
    }
    const int channels = select == -1 ? static_cast<int>(windows.size()) : 1;
    return NetworkSpec::for_input(ofdm.crop_rows, ofdm.crop_cols, channels, h_t);
}

std::filesystem::path ExperimentConfig::resolve(const std::filesystem::path& dir) const {
    if (dir.is_absolute()) return dir;
    if (const char* root = std::getenv("RDCOUNT_DATA_ROOT"); root != nullptr && *root != '\0') {
        return std::filesystem::path(root) / dir;
    }
    return base_dir / dir;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    json root;
    {
        const std::string text = read_file(path);
        try {
            root = json::parse(text);
        } catch (const json::exception& e) {
            throw ConfigError("config " + path.string() + ": " + e.what());
        }
    }
    ObjView top(root, "");

    ExperimentConfig cfg;
    cfg.base_dir = std::filesystem::absolute(path).parent_path();
    if (auto profile = top.maybe<std::string>("profile")) cfg.profile = *profile;
    apply_profile(cfg, cfg.profile);
    // windows default: rectangular + Hann, in that channel order
    cfg.windows = {WindowSpec::rectangular(), WindowSpec::hann()};
    cfg.eval.k_grid.clear();

    top.read_into("seed", cfg.seed);
    top.read_into("h_t", cfg.h_t);
    if (cfg.h_t != (cfg.profile == "desk" ? 6 : 12)) {
        cfg.gen.k_max = cfg.h_t; // keep label range in step unless gen overrides below
    }

    if (const json* j = top.raw("ofdm")) {
        ObjView v(*j, "ofdm");
        v.read_into("n_fft", cfg.ofdm.n_fft);
        v.read_into("n_use", cfg.ofdm.n_use);
        v.read_into("m_symbols", cfg.ofdm.m_symbols);
        v.read_into("m_per", cfg.ofdm.m_per);
        v.read_into("delta_f", cfg.ofdm.delta_f);
        v.read_into("f_c", cfg.ofdm.f_c);
        const bool has_tcp = v.has("t_cp");
        v.read_into("t_cp", cfg.ofdm.t_cp);
        if (!has_tcp) cfg.ofdm.t_cp = (1.0 / cfg.ofdm.delta_f) / 8.0;
        v.read_into("crop_rows", cfg.ofdm.crop_rows);
        v.read_into("crop_cols", cfg.ofdm.crop_cols);
        v.done();
    }
    if (const json* j = top.raw("gen")) {
        ObjView v(*j, "gen");
        v.read_into("k_min", cfg.gen.k_min);
        v.read_into("k_max", cfg.gen.k_max);
        v.read_into("d_min", cfg.gen.d_min);
        v.read_into("d_max", cfg.gen.d_max);
        v.read_into("d_ref", cfg.gen.d_ref);
        v.read_into("v_max", cfg.gen.v_max);
        v.read_into("snr_lo", cfg.gen.snr_lo);
        v.read_into("snr_hi", cfg.gen.snr_hi);
        v.done();
    }
    if (const json* j = top.raw("dataset")) {
        ObjView v(*j, "dataset");
        v.read_into("n_train", cfg.n_train);
        v.read_into("n_val", cfg.n_val);
        if (auto s = v.maybe<std::string>("scale")) cfg.scale = parse_scale(*s);
        if (const json* w = v.raw("windows")) cfg.windows = parse_windows(*w, "dataset.windows");
        v.done();
    }
    if (const json* j = top.raw("train")) {
        ObjView v(*j, "train");
        v.read_into("epochs", cfg.train.epochs);
        v.read_into("batch_size", cfg.train.batch_size);
        v.read_into("lr", cfg.train.lr);
        v.read_into("l2", cfg.train.l2);
        v.done();
    }
    if (const json* j = top.raw("eval")) {
        ObjView v(*j, "eval");
        if (auto grid = v.maybe<std::vector<double>>("snr_grid")) cfg.eval.snr_grid = *grid;
        v.read_into("fixed_snr_db", cfg.eval.fixed_snr_db);
        if (auto grid = v.maybe<std::vector<int>>("k_grid")) cfg.eval.k_grid = *grid;
        v.read_into("n_trials", cfg.eval.n_trials);
        v.done();
    }
    if (const json* j = top.raw("network")) {
        if (!j->is_string()) throw ConfigError("config: 'network' must be a model tag string");
        cfg.default_model = j->get<std::string>();
    }
    if (const json* j = top.raw("paths")) {
        ObjView v(*j, "paths");
        if (auto s = v.maybe<std::string>("data_dir")) cfg.paths.data_dir = *s;
        if (auto s = v.maybe<std::string>("ckpt_dir")) cfg.paths.ckpt_dir = *s;
        if (auto s = v.maybe<std::string>("out_dir")) cfg.paths.out_dir = *s;
        v.done();
    }
    top.done();

    if (cfg.eval.k_grid.empty()) {
        for (int k = 1; k <= cfg.h_t; ++k) cfg.eval.k_grid.push_back(k);
    }
    cfg.train.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

std::string digest_hex(std::uint64_t digest) {
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex[digest & 0xF];
        digest >>= 4;
    }
    return out;
}

} // namespace rdcount
