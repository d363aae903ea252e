#include "rdcount/report.hpp"

#include "rdcount/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace rdcount {

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
    std::string out = "epoch,train_ce,val_ce,val_mse\n";
    for (const auto& rec : history) {
        out += std::to_string(rec.epoch);
        out += ',';
        out += format_number(rec.train_ce);
        out += ',';
        out += format_number(rec.val_ce);
        out += ',';
        out += format_number(rec.val_mse);
        out += '\n';
    }
    return out;
}

std::string sweep_csv(const EvalResult& result) {
    const std::string axis_col = result.axis == SweepAxis::Snr ? "snr_db" : "k";
    std::string out = axis_col + ",model,mse,bias,n_trials\n";
    for (std::size_t c = 0; c < result.axis_values.size(); ++c) {
        for (std::size_t m = 0; m < result.model_names.size(); ++m) {
            const EvalCell& cell = result.cells[c][m];
            out += format_number(result.axis_values[c]);
            out += ',';
            out += result.model_names[m];
            out += ',';
            out += format_number(cell.mse);
            out += ',';
            out += format_number(cell.bias);
            out += ',';
            out += std::to_string(cell.n);
            out += '\n';
        }
    }
    return out;
}

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

/** @brief Round the span outward to tick positions at a 1/2/5 decade step. */
std::vector<double> nice_ticks(double lo, double hi) {
    if (!(hi > lo)) {
        hi = lo + 1.0;
        lo -= 1.0;
    }
    const double span = hi - lo;
    const double raw_step = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw_step)));
    double step = mag;
    for (double mult : {1.0, 2.0, 5.0, 10.0}) {
        if (mag * mult >= raw_step) {
            step = mag * mult;
            break;
        }
    }
    std::vector<double> ticks;
    const double first = std::ceil(lo / step) * step;
    for (double t = first; t <= hi + step * 1e-9; t += step) {
        ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
    }
    return ticks;
}

} // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label, const std::vector<Series>& series) {
    if (series.empty()) throw DomainError("render_line_chart: no series");
    constexpr double kW = 800, kH = 500;
    constexpr double kLeft = 70, kRight = 160, kTop = 50, kBottom = 60;
    const double plot_w = kW - kLeft - kRight;
    const double plot_h = kH - kTop - kBottom;

    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size() || s.x.empty()) {
            throw DomainError("render_line_chart: series '" + s.label + "' malformed");
        }
        for (double v : s.x) {
            x_lo = std::min(x_lo, v);
            x_hi = std::max(x_hi, v);
        }
        for (double v : s.y) {
            y_lo = std::min(y_lo, v);
            y_hi = std::max(y_hi, v);
        }
    }
    if (!(x_hi > x_lo)) x_hi = x_lo + 1.0;
    if (!(y_hi > y_lo)) y_hi = y_lo + 1.0;
    y_lo = std::min(y_lo, 0.0); // mse charts read best anchored at zero
    const double y_pad = (y_hi - y_lo) * 0.05;
    y_hi += y_pad;

    const auto sx = [&](double v) { return kLeft + (v - x_lo) / (x_hi - x_lo) * plot_w; };
    const auto sy = [&](double v) { return kTop + plot_h - (v - y_lo) / (y_hi - y_lo) * plot_h; };

    std::string svg;
    char buf[256];
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\" "
           "font-family=\"sans-serif\" font-size=\"13\">\n";
    svg += "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"28\" text-anchor=\"middle\" font-size=\"17\">%s</text>\n",
                  kLeft + plot_w / 2, escape_xml(title).c_str());
    svg += buf;

    for (double t : nice_ticks(x_lo, x_hi)) {
        const double px = sx(t);
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>\n",
                      px, kTop, px, kTop + plot_h);
        svg += buf;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%s</text>\n", px,
                      kTop + plot_h + 20, format_number(t).c_str());
        svg += buf;
    }
    for (double t : nice_ticks(y_lo, y_hi)) {
        const double py = sy(t);
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>\n",
                      kLeft, py, kLeft + plot_w, py);
        svg += buf;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%s</text>\n", kLeft - 8,
                      py + 4, format_number(t).c_str());
        svg += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
                  "stroke=\"#333\"/>\n",
                  kLeft, kTop, plot_w, plot_h);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%s</text>\n",
                  kLeft + plot_w / 2, kH - 15, escape_xml(x_label).c_str());
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"20\" y=\"%.1f\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
                  "%.1f)\">%s</text>\n",
                  kTop + plot_h / 2, kTop + plot_h / 2, escape_xml(y_label).c_str());
    svg += buf;

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        std::string points;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", sx(s.x[i]), sy(s.y[i]));
            points += buf;
        }
        svg += "<polyline fill=\"none\" stroke=\"";
        svg += color;
        svg += "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            std::snprintf(buf, sizeof(buf),
                          "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n", sx(s.x[i]),
                          sy(s.y[i]), color);
            svg += buf;
        }
        const double ly = kTop + 10 + 22 * static_cast<double>(si);
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" "
                      "stroke-width=\"2\"/>\n",
                      kLeft + plot_w + 12, ly, kLeft + plot_w + 36, ly, color);
        svg += buf;
        std::snprintf(buf, sizeof(buf), "<text x=\"%.1f\" y=\"%.1f\">%s</text>\n",
                      kLeft + plot_w + 42, ly + 4, escape_xml(s.label).c_str());
        svg += buf;
    }
    svg += "</svg>\n";
    return svg;
}

std::string sweep_svg(const EvalResult& result) {
    std::vector<Series> series;
    for (std::size_t m = 0; m < result.model_names.size(); ++m) {
        Series s;
        s.label = result.model_names[m];
        for (std::size_t c = 0; c < result.axis_values.size(); ++c) {
            s.x.push_back(result.axis_values[c]);
            s.y.push_back(result.cells[c][m].mse);
        }
        series.push_back(std::move(s));
    }
    const bool snr = result.axis == SweepAxis::Snr;
    return render_line_chart(snr ? "Count MSE vs SNR" : "Count MSE vs target count",
                             snr ? "SNR (dB)" : "targets K", "count MSE", series);
}

} // namespace rdcount
