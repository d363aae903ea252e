#include "rdcount/periodogram.hpp"

#include "rdcount/errors.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace rdcount {

namespace {

/** FFTW's planner is not thread-safe; plan creation/destruction serializes. */
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

fftw_complex* as_fftw(std::complex<double>* p) {
    return reinterpret_cast<fftw_complex*>(p);
}

} // namespace

PeriodogramEngine::PeriodogramEngine(const OfdmConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    std::vector<std::complex<double>> scratch(
        static_cast<std::size_t>(cfg_.n_fft) * cfg_.m_per);

    std::lock_guard<std::mutex> lock(planner_mutex());
    // Range axis: inverse transform (the +j kernel), one pass per occupied
    // column; columns beyond m_symbols stay zero and are skipped exactly.
    {
        int n = cfg_.n_fft;
        range_plan_ = fftw_plan_many_dft(
            1, &n, cfg_.m_symbols,
            as_fftw(scratch.data()), nullptr, cfg_.m_per, 1,
            as_fftw(scratch.data()), nullptr, cfg_.m_per, 1,
            FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    // Doppler axis: forward transform (the -j kernel), every row.
    {
        int n = cfg_.m_per;
        doppler_plan_ = fftw_plan_many_dft(
            1, &n, cfg_.n_fft,
            as_fftw(scratch.data()), nullptr, 1, cfg_.m_per,
            as_fftw(scratch.data()), nullptr, 1, cfg_.m_per,
            FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    if (range_plan_ == nullptr || doppler_plan_ == nullptr) {
        throw DomainError("PeriodogramEngine: transform planning failed");
    }
}

PeriodogramEngine::~PeriodogramEngine() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (range_plan_ != nullptr) fftw_destroy_plan(range_plan_);
    if (doppler_plan_ != nullptr) fftw_destroy_plan(doppler_plan_);
}

PeriodogramEngine::PeriodogramEngine(PeriodogramEngine&& other) noexcept
    : cfg_(other.cfg_),
      range_plan_(std::exchange(other.range_plan_, nullptr)),
      doppler_plan_(std::exchange(other.doppler_plan_, nullptr)) {}

PeriodogramEngine& PeriodogramEngine::operator=(PeriodogramEngine&& other) noexcept {
    if (this != &other) {
        {
            std::lock_guard<std::mutex> lock(planner_mutex());
            if (range_plan_ != nullptr) fftw_destroy_plan(range_plan_);
            if (doppler_plan_ != nullptr) fftw_destroy_plan(doppler_plan_);
        }
        cfg_ = other.cfg_;
        range_plan_ = std::exchange(other.range_plan_, nullptr);
        doppler_plan_ = std::exchange(other.doppler_plan_, nullptr);
    }
    return *this;
}

RdMap PeriodogramEngine::compute(const NormalizedFrame& frame, const Window2d& window) const {
    const int n_use = cfg_.n_use;
    const int m_sym = cfg_.m_symbols;
    if (frame.data.rows() != n_use || frame.data.cols() != m_sym) {
        throw DomainError("periodogram: frame is " + std::to_string(frame.data.rows()) + "x" +
                          std::to_string(frame.data.cols()) + ", expected " +
                          std::to_string(n_use) + "x" + std::to_string(m_sym));
    }
    if (static_cast<int>(window.row_weights.size()) != n_use ||
        static_cast<int>(window.col_weights.size()) != m_sym) {
        throw DomainError("periodogram: window dims mismatch frame dims");
    }

    // Per-call buffer keeps compute() safe for concurrent use of one engine.
    std::vector<std::complex<double>> buf(
        static_cast<std::size_t>(cfg_.n_fft) * cfg_.m_per, std::complex<double>(0.0, 0.0));
    for (int k = 0; k < n_use; ++k) {
        const double wr = window.row_weights[static_cast<std::size_t>(k)];
        std::complex<double>* row = buf.data() + static_cast<std::size_t>(k) * cfg_.m_per;
        const std::complex<double>* src = &frame.data(k, 0);
        for (int l = 0; l < m_sym; ++l) {
            row[l] = src[l] * (wr * window.col_weights[static_cast<std::size_t>(l)]);
        }
    }

    fftw_execute_dft(range_plan_, as_fftw(buf.data()), as_fftw(buf.data()));
    fftw_execute_dft(doppler_plan_, as_fftw(buf.data()), as_fftw(buf.data()));

    RdMap map{RealMat(cfg_.n_fft, cfg_.m_per), cfg_};
    const double scale = 1.0 / (static_cast<double>(cfg_.n_fft) * cfg_.m_symbols);
    double* out = map.values.data();
    for (std::size_t i = 0; i < buf.size(); ++i) {
        out[i] = std::norm(buf[i]) * scale;
    }
    return map;
}

RealMat crop_map(const RdMap& map, const OfdmConfig& cfg) {
    if (map.values.rows() != cfg.n_fft || map.values.cols() != cfg.m_per) {
        throw DomainError("crop_map: map dims mismatch config");
    }
    cfg.validate();
    RealMat crop(cfg.crop_rows, cfg.crop_cols);
    const int half = cfg.crop_cols / 2;
    for (int r = 0; r < cfg.crop_rows; ++r) {
        for (int j = 0; j < cfg.crop_cols; ++j) {
            const int s = j - half; // signed Doppler bin for this column
            const int col = ((s % cfg.m_per) + cfg.m_per) % cfg.m_per;
            crop(r, j) = map.values(r, col);
        }
    }
    return crop;
}

RdInput to_input(const std::vector<RealMat>& crops, Scale scale) {
    if (crops.empty() || crops.size() > 2) {
        throw DomainError("to_input: need 1 or 2 crops, got " + std::to_string(crops.size()));
    }
    for (const RealMat& c : crops) {
        if (c.rows() != crops[0].rows() || c.cols() != crops[0].cols()) {
            throw DomainError("to_input: crop shapes differ");
        }
    }

    RdInput input;
    input.scale = scale;
    input.channels.reserve(crops.size());
    for (const RealMat& c : crops) {
        if (scale == Scale::Linear) {
            input.channels.push_back(c);
            continue;
        }
        RealMat db(c.rows(), c.cols());
        double peak = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            peak = std::max(peak, c.data()[i]);
        }
        const double floor_lin = kDbFloorRel * peak;
        const double floor_db = 10.0 * std::log10(kDbFloorRel); // -120, used when peak == 0
        for (std::size_t i = 0; i < c.size(); ++i) {
            db.data()[i] = peak > 0
                               ? 10.0 * std::log10(std::max(c.data()[i], floor_lin))
                               : floor_db;
        }
        input.channels.push_back(std::move(db));
    }
    return input;
}

} // namespace rdcount
