#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lyam/harness.hpp"

namespace lyam::report {

/// Shortest round-trip decimal form, independent of the global locale.
/// NaN and infinities print as "nan", "inf" and "-inf".
std::string format_number(double value);

/// RFC 4180 writer: comma separators, CRLF-free "\n" line ends, fields
/// quoted only when they contain a comma, quote or newline.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void row(std::span<const std::string> fields);
    void row(std::initializer_list<std::string> fields) {
        row(std::span<const std::string>(fields.begin(), fields.size()));
    }

    static std::string escape(std::string_view field);

private:
    std::ostream& out_;
};

inline const std::vector<std::string>& trajectory_columns() {
    static const std::vector<std::string> cols = {"step",    "loss",    "grad_norm",
                                                  "mean_eta", "min_eta", "max_eta",
                                                  "delta_v", "drift_bound", "bound_ok"};
    return cols;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
/// step, val_loss, val_accuracy at the evaluation steps of a network run.
void write_validation_csv(std::ostream& out, const Trajectory& traj);

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotOptions {
    std::string title;
    std::string x_label = "step";
    std::string y_label;
    bool log_y = false;
    int width = 720;
    int height = 420;
};

/// Self-contained SVG line plot (inline styles, no external references).
/// Non-finite points, and non-positive ones on a log axis, are skipped.
std::string svg_line_plot(std::span<const Series> series, const PlotOptions& options);

}  // namespace lyam::report
