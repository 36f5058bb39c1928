#include "lyam/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace lyam::report {

namespace {

std::string to_chars_string(double value, std::chars_format fmt, int precision = -1) {
    char buf[64];
    const auto res = precision < 0 ? std::to_chars(buf, buf + sizeof(buf), value)
                                   : std::to_chars(buf, buf + sizeof(buf), value, fmt, precision);
    return std::string(buf, res.ptr);
}

std::string tick_label(double value) {
    if (value == 0.0) return "0";
    return to_chars_string(value, std::chars_format::general, 4);
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    return to_chars_string(value, std::chars_format::general);
}

std::string CsvWriter::escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void CsvWriter::row(std::span<const std::string> fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ',';
        out_ << escape(fields[i]);
    }
    out_ << '\n';
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    CsvWriter csv(out);
    csv.row(trajectory_columns());
    for (const auto& r : traj.steps) {
        const bool recorded = !std::isnan(r.drift_bound);
        csv.row({std::to_string(r.step), format_number(r.loss), format_number(r.grad_norm),
                 format_number(r.mean_eta), format_number(r.min_eta), format_number(r.max_eta),
                 format_number(r.delta_v), recorded ? format_number(r.drift_bound) : "",
                 recorded ? (r.bound_ok ? "1" : "0") : ""});
    }
}

void write_validation_csv(std::ostream& out, const Trajectory& traj) {
    CsvWriter csv(out);
    csv.row({"step", "val_loss", "val_accuracy"});
    for (const auto& r : traj.steps) {
        if (std::isnan(r.val_loss)) continue;
        csv.row({std::to_string(r.step), format_number(r.val_loss), format_number(r.val_accuracy)});
    }
}

std::string svg_line_plot(std::span<const Series> series, const PlotOptions& opt) {
    const double left = 80, right = 160, top = 40, bottom = 50;
    const double plot_w = opt.width - left - right;
    const double plot_h = opt.height - top - bottom;

    auto transform_y = [&](double y) { return opt.log_y ? std::log10(y) : y; };
    auto usable = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!opt.log_y || y > 0.0);
    };

    double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            x_lo = std::min(x_lo, s.x[i]);
            x_hi = std::max(x_hi, s.x[i]);
            y_lo = std::min(y_lo, transform_y(s.y[i]));
            y_hi = std::max(y_hi, transform_y(s.y[i]));
        }
    }
    if (!(x_lo <= x_hi)) x_lo = 0, x_hi = 1;
    if (!(y_lo <= y_hi)) y_lo = 0, y_hi = 1;
    if (x_hi == x_lo) x_hi = x_lo + 1;
    if (y_hi == y_lo) {
        y_lo -= 0.5;
        y_hi += 0.5;
    }

    auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * plot_w; };
    auto py = [&](double ty) { return top + (1.0 - (ty - y_lo) / (y_hi - y_lo)) * plot_h; };
    auto coord = [](double v) { return to_chars_string(v, std::chars_format::fixed, 2); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\""
        << opt.height << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!opt.title.empty()) {
        svg << "<text x=\"" << coord(left + plot_w / 2) << "\" y=\"24\" text-anchor=\"middle\" "
            << "font-family=\"sans-serif\" font-size=\"15\">" << xml_escape(opt.title)
            << "</text>\n";
    }
    svg << "<rect x=\"" << coord(left) << "\" y=\"" << coord(top) << "\" width=\""
        << coord(plot_w) << "\" height=\"" << coord(plot_h)
        << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";

    constexpr int kTicks = 5;
    for (int k = 0; k <= kTicks; ++k) {
        const double fx = x_lo + (x_hi - x_lo) * k / kTicks;
        const double fy = y_lo + (y_hi - y_lo) * k / kTicks;
        svg << "<line x1=\"" << coord(px(fx)) << "\" y1=\"" << coord(top + plot_h) << "\" x2=\""
            << coord(px(fx)) << "\" y2=\"" << coord(top + plot_h + 5)
            << "\" stroke=\"#444\"/>\n";
        svg << "<text x=\"" << coord(px(fx)) << "\" y=\"" << coord(top + plot_h + 18)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << tick_label(fx) << "</text>\n";
        svg << "<line x1=\"" << coord(left - 5) << "\" y1=\"" << coord(py(fy)) << "\" x2=\""
            << coord(left) << "\" y2=\"" << coord(py(fy)) << "\" stroke=\"#444\"/>\n";
        svg << "<text x=\"" << coord(left - 8) << "\" y=\"" << coord(py(fy) + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << tick_label(opt.log_y ? std::pow(10.0, fy) : fy) << "</text>\n";
    }
    svg << "<text x=\"" << coord(left + plot_w / 2) << "\" y=\"" << coord(opt.height - 10.0)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << xml_escape(opt.x_label) << "</text>\n";
    if (!opt.y_label.empty()) {
        const std::string label = opt.y_label + (opt.log_y ? " (log)" : "");
        svg << "<text x=\"16\" y=\"" << coord(top + plot_h / 2)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
            << "transform=\"rotate(-90 16 " << coord(top + plot_h / 2) << ")\">"
            << xml_escape(label) << "</text>\n";
    }

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % std::size(kPalette)];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        const auto& ser = series[s];
        for (std::size_t i = 0; i < std::min(ser.x.size(), ser.y.size()); ++i) {
            if (!usable(ser.x[i], ser.y[i])) continue;
            if (!first) svg << ' ';
            svg << coord(px(ser.x[i])) << ',' << coord(py(transform_y(ser.y[i])));
            first = false;
        }
        svg << "\"/>\n";
        const double ly = top + 14.0 + 18.0 * static_cast<double>(s);
        svg << "<line x1=\"" << coord(left + plot_w + 12) << "\" y1=\"" << coord(ly) << "\" x2=\""
            << coord(left + plot_w + 32) << "\" y2=\"" << coord(ly) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << coord(left + plot_w + 38) << "\" y=\"" << coord(ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(ser.name)
            << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace lyam::report
