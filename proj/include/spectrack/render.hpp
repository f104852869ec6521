#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <string>
#include <vector>

#include "spectrack/errors.hpp"
#include "spectrack/format.hpp"
#include "spectrack/rtdt.hpp"
#include "spectrack/time.hpp"

namespace spectrack {

/// Two-color temporal gradient, earliest to latest.
struct ColorScale {
    std::array<int, 3> start{31, 119, 180};
    std::array<int, 3> end{214, 39, 40};
};

struct MapAnnotation {
    double x = 0.0;
    double y = 0.0;
    std::string label;
};

/// Everything needed to draw one scatter map.
struct MapFigureSpec {
    struct Point {
        double x = 0.0;
        double y = 0.0;
        UtcTime timestamp;
    };
    std::vector<Point> points;
    std::vector<std::size_t> highlight; // indices drawn emphasized
    bool trajectory = false;
    ColorScale color_scale;
    std::vector<MapAnnotation> annotations;

    void validate() const {
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!std::isfinite(points[i].x) || !std::isfinite(points[i].y))
                throw ValidationError("MapFigureSpec: non-finite coordinate at index " +
                                      std::to_string(i));
            if (trajectory && i > 0 && points[i].timestamp < points[i - 1].timestamp)
                throw ValidationError("MapFigureSpec: trajectory requires ascending timestamps");
        }
        for (std::size_t i : highlight)
            if (i >= points.size())
                throw ValidationError("MapFigureSpec: highlight index out of range");
        for (const auto& a : annotations)
            if (!std::isfinite(a.x) || !std::isfinite(a.y))
                throw ValidationError("MapFigureSpec: non-finite annotation coordinate");
    }
};

namespace detail {

constexpr double kFigWidth = 800.0;
constexpr double kFigHeight = 600.0;
constexpr double kFigMargin = 60.0;

/// Data-to-pixel affine transform. The exact parameters are stamped onto
/// the svg element as data- attributes so documents can be inverted.
struct AxisTransform {
    double x_min = 0.0, x_max = 1.0;
    double y_min = 0.0, y_max = 1.0;
    double plot_x = kFigMargin, plot_y = kFigMargin;
    double plot_w = kFigWidth - 2.0 * kFigMargin;
    double plot_h = kFigHeight - 2.0 * kFigMargin;

    double px(double x) const { return plot_x + (x - x_min) / (x_max - x_min) * plot_w; }
    double py(double y) const { return plot_y + (y_max - y) / (y_max - y_min) * plot_h; }
};

inline AxisTransform fit_axes(double x_min, double x_max, double y_min, double y_max) {
    auto widen = [](double& lo, double& hi) {
        const double span = hi - lo;
        if (span <= 0.0) {
            const double pad = std::max(1.0, std::abs(lo)) * 0.5;
            lo -= pad;
            hi += pad;
        } else {
            lo -= 0.05 * span;
            hi += 0.05 * span;
        }
    };
    widen(x_min, x_max);
    widen(y_min, y_max);
    AxisTransform t;
    t.x_min = x_min;
    t.x_max = x_max;
    t.y_min = y_min;
    t.y_max = y_max;
    return t;
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

inline std::string gradient_color(const ColorScale& scale, double fraction) {
    char buf[8];
    std::array<int, 3> rgb{};
    for (int k = 0; k < 3; ++k) {
        const double v = scale.start[static_cast<std::size_t>(k)] +
                         fraction * (scale.end[static_cast<std::size_t>(k)] -
                                     scale.start[static_cast<std::size_t>(k)]);
        rgb[static_cast<std::size_t>(k)] = std::clamp(static_cast<int>(std::lround(v)), 0, 255);
    }
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
    return buf;
}

inline std::string svg_open(const AxisTransform& t) {
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
                      "viewBox=\"0 0 800 600\"";
    auto attr = [&](const char* name, double value) {
        out += ' ';
        out += name;
        out += "=\"";
        out += fmt_double(value);
        out += '"';
    };
    attr("data-x-min", t.x_min);
    attr("data-x-max", t.x_max);
    attr("data-y-min", t.y_min);
    attr("data-y-max", t.y_max);
    attr("data-plot-x", t.plot_x);
    attr("data-plot-y", t.plot_y);
    attr("data-plot-w", t.plot_w);
    attr("data-plot-h", t.plot_h);
    out += ">\n";
    out += "<rect class=\"background\" x=\"0\" y=\"0\" width=\"800\" height=\"600\" "
           "fill=\"#ffffff\"/>\n";
    out += "<rect class=\"frame\" x=\"" + fmt_double(t.plot_x) + "\" y=\"" + fmt_double(t.plot_y) +
           "\" width=\"" + fmt_double(t.plot_w) + "\" height=\"" + fmt_double(t.plot_h) +
           "\" fill=\"none\" stroke=\"#404040\"/>\n";
    return out;
}

} // namespace detail

/// Render a 2D scatter map with temporal coloring, optional trajectory
/// polyline, highlighted subset, and annotations. Same spec, same bytes.
inline std::string render_map(const MapFigureSpec& spec) {
    spec.validate();
    if (spec.points.empty()) throw ValidationError("render_map: no points");

    double x_min = spec.points[0].x, x_max = spec.points[0].x;
    double y_min = spec.points[0].y, y_max = spec.points[0].y;
    for (const auto& p : spec.points) {
        x_min = std::min(x_min, p.x);
        x_max = std::max(x_max, p.x);
        y_min = std::min(y_min, p.y);
        y_max = std::max(y_max, p.y);
    }
    const auto t = detail::fit_axes(x_min, x_max, y_min, y_max);

    std::string out = detail::svg_open(t);

    if (spec.trajectory) {
        out += "<polyline class=\"trajectory\" fill=\"none\" stroke=\"#909090\" points=\"";
        for (std::size_t i = 0; i < spec.points.size(); ++i) {
            if (i) out += ' ';
            out += fmt_double(t.px(spec.points[i].x));
            out += ',';
            out += fmt_double(t.py(spec.points[i].y));
        }
        out += "\"/>\n";
    }

    std::vector<bool> emphasized(spec.points.size(), false);
    for (std::size_t i : spec.highlight) emphasized[i] = true;

    const double denom = spec.points.size() > 1 ? static_cast<double>(spec.points.size() - 1) : 1.0;
    for (std::size_t i = 0; i < spec.points.size(); ++i) {
        const auto& p = spec.points[i];
        out += "<circle class=\"marker";
        if (emphasized[i]) out += " highlight";
        out += "\" cx=\"" + fmt_double(t.px(p.x)) + "\" cy=\"" + fmt_double(t.py(p.y)) +
               "\" r=\"" + (emphasized[i] ? std::string("5") : std::string("3")) + "\" fill=\"" +
               detail::gradient_color(spec.color_scale, static_cast<double>(i) / denom) + "\"";
        if (emphasized[i]) out += " stroke=\"#000000\"";
        out += " data-index=\"" + std::to_string(i) + "\"/>\n";
    }

    for (const auto& a : spec.annotations) {
        out += "<g class=\"annotation\">\n";
        out += "<circle cx=\"" + fmt_double(t.px(a.x)) + "\" cy=\"" + fmt_double(t.py(a.y)) +
               "\" r=\"7\" fill=\"none\" stroke=\"#d62728\"/>\n";
        out += "<text x=\"" + fmt_double(t.px(a.x) + 9.0) + "\" y=\"" + fmt_double(t.py(a.y)) +
               "\" font-size=\"12\">" + detail::xml_escape(a.label) + "</text>\n";
        out += "</g>\n";
    }

    out += "</svg>\n";
    return out;
}

/// Render the rho_avg history as a polyline over time with the threshold
/// line and one marker per alert.
inline std::string render_rho_curve(const std::vector<std::pair<UtcTime, double>>& history,
                                    double threshold, const std::vector<AlertEvent>& alerts) {
    if (history.empty()) throw ValidationError("render_rho_curve: empty history");
    if (!std::isfinite(threshold)) throw ValidationError("render_rho_curve: non-finite threshold");
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (!std::isfinite(history[i].second))
            throw ValidationError("render_rho_curve: non-finite rho_avg at index " +
                                  std::to_string(i));
        if (i > 0 && history[i].first < history[i - 1].first)
            throw ValidationError("render_rho_curve: timestamps must be ascending");
    }

    const double t0 = static_cast<double>(history.front().first.epoch_seconds());
    double x_min = 0.0, x_max = 0.0;
    double y_min = 0.0, y_max = threshold;
    for (const auto& [ts, v] : history) {
        const double x = static_cast<double>(ts.epoch_seconds()) - t0;
        x_max = std::max(x_max, x);
        y_min = std::min(y_min, v);
        y_max = std::max(y_max, v);
    }
    const auto t = detail::fit_axes(x_min, x_max, y_min, y_max);

    std::string out = detail::svg_open(t);
    out += "<line class=\"threshold\" x1=\"" + fmt_double(t.plot_x) + "\" y1=\"" +
           fmt_double(t.py(threshold)) + "\" x2=\"" + fmt_double(t.plot_x + t.plot_w) +
           "\" y2=\"" + fmt_double(t.py(threshold)) +
           "\" stroke=\"#d62728\" stroke-dasharray=\"6 3\"/>\n";

    out += "<polyline class=\"rho-curve\" fill=\"none\" stroke=\"#1f77b4\" points=\"";
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (i) out += ' ';
        const double x = static_cast<double>(history[i].first.epoch_seconds()) - t0;
        out += fmt_double(t.px(x));
        out += ',';
        out += fmt_double(t.py(history[i].second));
    }
    out += "\"/>\n";

    for (std::size_t i = 0; i < history.size(); ++i) {
        const double x = static_cast<double>(history[i].first.epoch_seconds()) - t0;
        out += "<circle class=\"rho-point\" cx=\"" + fmt_double(t.px(x)) + "\" cy=\"" +
               fmt_double(t.py(history[i].second)) + "\" r=\"2\" fill=\"#1f77b4\" data-index=\"" +
               std::to_string(i) + "\"/>\n";
    }

    for (const auto& alert : alerts) {
        const double x = static_cast<double>(alert.timestamp.epoch_seconds()) - t0;
        out += "<circle class=\"alert\" cx=\"" + fmt_double(t.px(x)) + "\" cy=\"" +
               fmt_double(t.py(alert.rho_avg)) +
               "\" r=\"6\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
    }

    out += "</svg>\n";
    return out;
}

} // namespace spectrack
