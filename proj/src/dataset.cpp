#include "rdcount/dataset.hpp"

#include "rdcount/binio.hpp"
#include "rdcount/errors.hpp"

#include <string>
#include <utility>

namespace rdcount {

namespace {

constexpr std::uint32_t kDatasetMagic = 0x53444452u; // "RDDS" little-endian
constexpr std::uint32_t kDatasetVersion = 1;

void write_window(BinWriter& w, const WindowSpec& spec) {
    w.write_u8(static_cast<std::uint8_t>(spec.kind));
    w.write_f64(spec.attenuation_db);
}

WindowSpec read_window(BinReader& r) {
    WindowSpec spec;
    const std::uint8_t kind = r.read_u8();
    if (kind > static_cast<std::uint8_t>(WindowKind::DolphChebyshev)) {
        throw FormatError("dataset: unknown window kind " + std::to_string(kind));
    }
    spec.kind = static_cast<WindowKind>(kind);
    spec.attenuation_db = r.read_f64();
    return spec;
}

} // namespace

void DatasetBuildSpec::validate() const {
    ofdm.validate();
    gen.validate(ofdm);
    if (windows.empty()) throw ConfigError("dataset: window bank must not be empty");
    if (n_samples < 1) throw ConfigError("dataset: n_samples must be >= 1");
}

std::uint64_t DatasetBuildSpec::digest() const {
    Fnv1a d;
    ofdm.update_digest(d);
    gen.update_digest(d);
    d.update_value(static_cast<std::uint64_t>(windows.size()));
    for (const auto& w : windows) w.update_digest(d);
    d.update_value(static_cast<std::uint8_t>(scale));
    d.update_value(n_samples);
    d.update_value(seed);
    d.update_value(static_cast<std::uint64_t>(stream));
    return d.value();
}

Dataset build_dataset(const DatasetBuildSpec& spec,
                      const std::function<void(int, int)>& progress) {
    spec.validate();

    PeriodogramEngine engine(spec.ofdm);
    std::vector<Window2d> bank;
    bank.reserve(spec.windows.size());
    for (const auto& wspec : spec.windows) {
        bank.push_back(Window2d::separable(wspec, spec.ofdm));
    }

    Dataset ds;
    ds.rows = spec.ofdm.crop_rows;
    ds.cols = spec.ofdm.crop_cols;
    ds.n_channels = static_cast<int>(spec.windows.size());
    ds.scale = spec.scale;
    ds.k_max = spec.gen.k_max;
    ds.seed = spec.seed;
    ds.stream = spec.stream;
    ds.config_digest = spec.digest();
    ds.windows = spec.windows;
    ds.labels.resize(static_cast<std::size_t>(spec.n_samples));
    ds.snr_db.resize(static_cast<std::size_t>(spec.n_samples));
    ds.scene_digests.resize(static_cast<std::size_t>(spec.n_samples));
    ds.data.resize(static_cast<std::size_t>(spec.n_samples) * ds.sample_stride());

    std::vector<RealMat> crops(spec.windows.size());
    for (int i = 0; i < spec.n_samples; ++i) {
        RandomSource rng(derive_seed(spec.seed, spec.stream, static_cast<std::uint64_t>(i)));
        const SceneSpec scene = sample_scene(spec.ofdm, spec.gen, rng);
        const NormalizedFrame frame = make_frame(spec.ofdm, scene, rng); // one frame only
        for (std::size_t w = 0; w < bank.size(); ++w) {
            const RdMap map = engine.compute(frame, bank[w]);
            crops[w] = crop_map(map, spec.ofdm);
        }
        const RdInput input = to_input(crops, spec.scale);

        ds.labels[static_cast<std::size_t>(i)] = static_cast<int>(scene.targets.size());
        ds.snr_db[static_cast<std::size_t>(i)] = static_cast<float>(scene.snr_db);
        ds.scene_digests[static_cast<std::size_t>(i)] = scene_digest(scene);
        float* dst = ds.data.data() + static_cast<std::size_t>(i) * ds.sample_stride();
        for (std::size_t w = 0; w < input.channels.size(); ++w) {
            const RealMat& plane = input.channels[w];
            for (std::size_t j = 0; j < plane.size(); ++j) {
                dst[w * plane.size() + j] = static_cast<float>(plane.data()[j]);
            }
        }
        if (progress) progress(i + 1, spec.n_samples);
    }
    return ds;
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
    AtomicFile file(path);
    BinWriter w(file.stream());
    w.write_u32(kDatasetMagic);
    w.write_u32(kDatasetVersion);
    w.write_u32(static_cast<std::uint32_t>(ds.rows));
    w.write_u32(static_cast<std::uint32_t>(ds.cols));
    w.write_u32(static_cast<std::uint32_t>(ds.n_channels));
    w.write_u8(static_cast<std::uint8_t>(ds.scale));
    w.write_u32(static_cast<std::uint32_t>(ds.k_max));
    w.write_u64(static_cast<std::uint64_t>(ds.n_samples()));
    w.write_u64(ds.seed);
    w.write_u64(static_cast<std::uint64_t>(ds.stream));
    w.write_u64(ds.config_digest);
    for (const auto& wspec : ds.windows) write_window(w, wspec);

    for (int i = 0; i < ds.n_samples(); ++i) {
        w.write_u16(static_cast<std::uint16_t>(ds.labels[static_cast<std::size_t>(i)]));
        w.write_f32(ds.snr_db[static_cast<std::size_t>(i)]);
        w.write_u64(ds.scene_digests[static_cast<std::size_t>(i)]);
        const float* src = ds.sample_ptr(i);
        w.write_bytes(src, ds.sample_stride() * sizeof(float));
    }
    w.write_u64(w.digest()); // trailer: digest of everything before it
    file.commit();
}

namespace {

DatasetHeader read_header_fields(BinReader& r, const std::filesystem::path& path) {
    const std::uint32_t magic = r.read_u32();
    if (magic != kDatasetMagic) {
        throw FormatError("dataset " + path.string() + ": bad magic");
    }
    const std::uint32_t version = r.read_u32();
    if (version != kDatasetVersion) {
        throw FormatError("dataset " + path.string() + ": unsupported version " +
                          std::to_string(version));
    }
    DatasetHeader h;
    h.rows = static_cast<int>(r.read_u32());
    h.cols = static_cast<int>(r.read_u32());
    h.n_channels = static_cast<int>(r.read_u32());
    const std::uint8_t scale = r.read_u8();
    if (scale > static_cast<std::uint8_t>(Scale::Decibel)) {
        throw FormatError("dataset " + path.string() + ": unknown scale");
    }
    h.scale = static_cast<Scale>(scale);
    h.k_max = static_cast<int>(r.read_u32());
    h.n_samples = r.read_u64();
    h.seed = r.read_u64();
    h.stream = static_cast<SeedStream>(r.read_u64());
    h.config_digest = r.read_u64();
    if (h.rows < 1 || h.cols < 1 || h.n_channels < 1) {
        throw FormatError("dataset " + path.string() + ": degenerate geometry");
    }
    h.windows.reserve(static_cast<std::size_t>(h.n_channels));
    for (int i = 0; i < h.n_channels; ++i) h.windows.push_back(read_window(r));
    return h;
}

} // namespace

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in = open_for_read(path);
    BinReader r(in, path.string());
    const DatasetHeader h = read_header_fields(r, path);

    Dataset ds;
    ds.rows = h.rows;
    ds.cols = h.cols;
    ds.n_channels = h.n_channels;
    ds.scale = h.scale;
    ds.k_max = h.k_max;
    ds.seed = h.seed;
    ds.stream = h.stream;
    ds.config_digest = h.config_digest;
    ds.windows = h.windows;

    const auto n = static_cast<std::size_t>(h.n_samples);
    ds.labels.resize(n);
    ds.snr_db.resize(n);
    ds.scene_digests.resize(n);
    ds.data.resize(n * ds.sample_stride());
    for (std::size_t i = 0; i < n; ++i) {
        ds.labels[i] = r.read_u16();
        ds.snr_db[i] = r.read_f32();
        ds.scene_digests[i] = r.read_u64();
        r.read_bytes(ds.data.data() + i * ds.sample_stride(),
                     ds.sample_stride() * sizeof(float));
    }
    const std::uint64_t expect = r.digest(); // digest of all payload bytes read
    const std::uint64_t trailer = r.read_u64();
    if (trailer != expect) {
        throw FormatError("dataset " + path.string() + ": digest mismatch (corrupt file)");
    }
    if (in.peek() != std::ifstream::traits_type::eof()) {
        throw FormatError("dataset " + path.string() + ": trailing bytes after digest");
    }
    return ds;
}

DatasetHeader read_dataset_header(const std::filesystem::path& path) {
    std::ifstream in = open_for_read(path);
    BinReader r(in, path.string());
    return read_header_fields(r, path);
}

void gather_batch(const Dataset& ds, const std::vector<int>& indices, int channel_select,
                  Tensor<float>& x, std::vector<int>& labels) {
    if (channel_select < -1 || channel_select >= ds.n_channels) {
        throw DomainError("gather_batch: channel_select " + std::to_string(channel_select) +
                          " out of range for " + std::to_string(ds.n_channels) + " channels");
    }
    const int b = static_cast<int>(indices.size());
    const int cc = channel_select == -1 ? ds.n_channels : 1;
    if (x.n() != b || x.h() != ds.rows || x.w() != ds.cols || x.c() != cc) {
        x = Tensor<float>(b, ds.rows, ds.cols, cc);
    }
    labels.resize(static_cast<std::size_t>(b));
    const std::size_t plane = static_cast<std::size_t>(ds.rows) * ds.cols;
    for (int bi = 0; bi < b; ++bi) {
        const int si = indices[static_cast<std::size_t>(bi)];
        if (si < 0 || si >= ds.n_samples()) {
            throw DomainError("gather_batch: sample index out of range");
        }
        labels[static_cast<std::size_t>(bi)] = ds.labels[static_cast<std::size_t>(si)];
        const float* src = ds.sample_ptr(si);
        float* dst = x.data() + static_cast<std::size_t>(bi) * x.size() / x.n();
        if (channel_select == -1) {
            // planes are channel-major on disk, NHWC in the tensor
            for (int ch = 0; ch < ds.n_channels; ++ch) {
                const float* p = src + static_cast<std::size_t>(ch) * plane;
                for (std::size_t j = 0; j < plane; ++j) {
                    dst[j * ds.n_channels + ch] = p[j];
                }
            }
        } else {
            const float* p = src + static_cast<std::size_t>(channel_select) * plane;
            for (std::size_t j = 0; j < plane; ++j) dst[j] = p[j];
        }
    }
}

} // namespace rdcount
