#pragma once

#include "rdcount/evaluate.hpp"
#include "rdcount/trainer.hpp"

#include <string>
#include <vector>

namespace rdcount {

/** @brief Training history as CSV: epoch,train_ce,val_ce,val_mse. Row order
 *         and number formatting are fixed, so identical runs give identical
 *         bytes. */
[[nodiscard]] std::string history_csv(const std::vector<EpochRecord>& history);

/** @brief Sweep result as tidy CSV (one row per condition x model):
 *         snr_db|k,model,mse,bias,n_trials. Conditions keep grid order,
 *         models keep caller order. */
[[nodiscard]] std::string sweep_csv(const EvalResult& result);

/** @brief One polyline of a chart. */
struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/** @brief Self-contained SVG line chart: linear axes with ticks, one colored
 *         polyline with point markers per series, and a legend. */
[[nodiscard]] std::string render_line_chart(const std::string& title,
                                            const std::string& x_label,
                                            const std::string& y_label,
                                            const std::vector<Series>& series);

/** @brief Chart view of a sweep (x = axis value, y = mse, one series per
 *         model). */
[[nodiscard]] std::string sweep_svg(const EvalResult& result);

/** @brief Fixed, locale-independent number formatting used by every report. */
[[nodiscard]] std::string format_number(double v);

} // namespace rdcount
