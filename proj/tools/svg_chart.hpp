#pragma once

// Minimal self-contained SVG line charts for the CLI's --svg flag. One fixed
// canvas, one polyline per series, automatic axis ranges, no styling
// guarantees. NaN points split a series into separate segments.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace icboost::svgchart {

struct Series {
    std::string label;
    std::vector<double> xs;
    std::vector<double> ys;  // same length as xs
};

namespace detail {

inline std::string escape_xml(const std::string& s) {
    std::string out;
    out.reserve(s.size());
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

inline std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace detail

// Writes a line chart of every series over the union of their finite points.
// Throws std::runtime_error when the file cannot be written or no series has
// a finite point.
inline void write_line_chart(const std::string& path, const std::string& title,
                             const std::string& x_label, const std::string& y_label,
                             const std::vector<Series>& series) {
    static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                     "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
    constexpr int kColors = 8;
    constexpr double kW = 960, kH = 540;
    constexpr double kLeft = 72, kRight = 24, kTop = 44, kBottom = 52;

    double x_lo = 0, x_hi = 0, y_lo = 0, y_hi = 0;
    bool any = false;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.xs.size() && i < s.ys.size(); ++i) {
            if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
            if (!any) {
                x_lo = x_hi = s.xs[i];
                y_lo = y_hi = s.ys[i];
                any = true;
            } else {
                x_lo = std::min(x_lo, s.xs[i]);
                x_hi = std::max(x_hi, s.xs[i]);
                y_lo = std::min(y_lo, s.ys[i]);
                y_hi = std::max(y_hi, s.ys[i]);
            }
        }
    }
    if (!any) throw std::runtime_error("chart '" + title + "' has no finite points");
    if (x_hi == x_lo) {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    if (y_hi == y_lo) {
        double pad = y_lo == 0.0 ? 0.5 : std::fabs(y_lo) * 0.05;
        y_lo -= pad;
        y_hi += pad;
    } else {
        double pad = (y_hi - y_lo) * 0.05;
        y_lo -= pad;
        y_hi += pad;
    }

    const double plot_w = kW - kLeft - kRight;
    const double plot_h = kH - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
    auto py = [&](double y) { return kTop + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h; };

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
        << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n"
        << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n"
        << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\""
        << " font-size=\"16\">" << detail::escape_xml(title) << "</text>\n";

    // Axes with five ticks each.
    out << "<g stroke=\"#333\" stroke-width=\"1\">\n"
        << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w
        << "\" y2=\"" << kTop + plot_h << "\"/>\n"
        << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
        << kTop + plot_h << "\"/>\n</g>\n";
    out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (int t = 0; t <= 4; ++t) {
        double fx = x_lo + (x_hi - x_lo) * t / 4.0;
        double fy = y_lo + (y_hi - y_lo) * t / 4.0;
        out << "<line x1=\"" << detail::num(px(fx)) << "\" y1=\"" << kTop + plot_h << "\" x2=\""
            << detail::num(px(fx)) << "\" y2=\"" << kTop + plot_h + 5
            << "\" stroke=\"#333\"/>\n";
        out << "<text x=\"" << detail::num(px(fx)) << "\" y=\"" << kTop + plot_h + 18
            << "\" text-anchor=\"middle\">" << detail::num(fx) << "</text>\n";
        out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << detail::num(py(fy)) << "\" x2=\""
            << kLeft << "\" y2=\"" << detail::num(py(fy)) << "\" stroke=\"#333\"/>\n";
        out << "<text x=\"" << kLeft - 8 << "\" y=\"" << detail::num(py(fy) + 4)
            << "\" text-anchor=\"end\">" << detail::num(fy) << "</text>\n";
    }
    out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kH - 12
        << "\" text-anchor=\"middle\">" << detail::escape_xml(x_label) << "</text>\n";
    out << "<text x=\"16\" y=\"" << kTop + plot_h / 2 << "\" text-anchor=\"middle\""
        << " transform=\"rotate(-90 16 " << kTop + plot_h / 2 << ")\">"
        << detail::escape_xml(y_label) << "</text>\n</g>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % kColors];
        std::string points;
        auto flush = [&]() {
            if (!points.empty()) {
                out << "<polyline fill=\"none\" stroke=\"" << color
                    << "\" stroke-width=\"1.5\" points=\"" << points << "\"/>\n";
                points.clear();
            }
        };
        for (std::size_t i = 0; i < s.xs.size() && i < s.ys.size(); ++i) {
            if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) {
                flush();
                continue;
            }
            if (!points.empty()) points += ' ';
            points += detail::num(px(s.xs[i])) + "," + detail::num(py(s.ys[i]));
        }
        flush();
    }

    out << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (std::size_t si = 0; si < series.size(); ++si) {
        double ly = kTop + 8 + 16.0 * static_cast<double>(si);
        out << "<rect x=\"" << kLeft + plot_w - 150 << "\" y=\"" << ly - 9
            << "\" width=\"10\" height=\"10\" fill=\"" << kPalette[si % kColors] << "\"/>\n"
            << "<text x=\"" << kLeft + plot_w - 136 << "\" y=\"" << ly << "\">"
            << detail::escape_xml(series[si].label) << "</text>\n";
    }
    out << "</g>\n</svg>\n";
    if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

}  // namespace icboost::svgchart
