#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "genret/common.hpp"
#include "genret/scalefit.hpp"

namespace genret {

enum class PlotAxes { log_x_linear_y, log_x_log_y };

struct PlotOptions {
    PlotAxes axes = PlotAxes::log_x_linear_y;
    std::string title;
    std::string x_label = "x";
    std::string y_label = "y";
};

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

inline void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw data_error("cannot write " + tmp);
        out << content;
        if (!out) throw data_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace detail

// Self-contained scatter + fitted-curve SVG. Output bytes are a pure
// function of the inputs: scatter markers are <circle> elements, the
// 200-sample fitted curve is a single <path>, and the R^2 annotation is a
// <text> element. A null fit renders the scatter alone.
inline std::string render_plot(const std::vector<ScalingPoint>& points, const FitResult* fit,
                               const PlotOptions& opt = {}) {
    if (points.empty()) throw data_error("render_plot: no points");
    const double width = 640.0, height = 480.0;
    const double ml = 70.0, mr = 20.0, mt = 40.0, mb = 50.0;

    const bool log_y = opt.axes == PlotAxes::log_x_log_y;
    double x_min = points[0].x, x_max = points[0].x;
    double y_min = points[0].y, y_max = points[0].y;
    for (const auto& p : points) {
        x_min = std::min(x_min, p.x);
        x_max = std::max(x_max, p.x);
        y_min = std::min(y_min, p.y);
        y_max = std::max(y_max, p.y);
    }
    if (!(x_min > 0.0)) throw data_error("render_plot: x must be positive for a log axis");
    if (log_y && !(y_min > 0.0)) throw data_error("render_plot: y must be positive for log_y");
    if (x_max == x_min) x_max = x_min * 10.0;
    if (y_max == y_min) y_max = y_min == 0.0 ? 1.0 : y_min * (log_y ? 10.0 : 1.1);

    auto tx = [&](double x) {
        const double lo = std::log10(x_min), hi = std::log10(x_max);
        return ml + (std::log10(x) - lo) / (hi - lo) * (width - ml - mr);
    };
    auto ty = [&](double y) {
        double lo = log_y ? std::log10(y_min) : y_min;
        double hi = log_y ? std::log10(y_max) : y_max;
        double v = log_y ? std::log10(y) : y;
        return height - mb - (v - lo) / (hi - lo) * (height - mt - mb);
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
           "viewBox=\"0 0 640 480\">\n";
    svg += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
    // axes
    svg += "<line x1=\"" + detail::fmt(ml) + "\" y1=\"" + detail::fmt(height - mb) + "\" x2=\"" +
           detail::fmt(width - mr) + "\" y2=\"" + detail::fmt(height - mb) +
           "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + detail::fmt(ml) + "\" y1=\"" + detail::fmt(mt) + "\" x2=\"" +
           detail::fmt(ml) + "\" y2=\"" + detail::fmt(height - mb) + "\" stroke=\"black\"/>\n";

    // tick labels at the range ends
    svg += "<text x=\"" + detail::fmt(ml) + "\" y=\"" + detail::fmt(height - mb + 20) +
           "\" font-size=\"12\">" + detail::fmt(x_min) + "</text>\n";
    svg += "<text x=\"" + detail::fmt(width - mr - 40) + "\" y=\"" + detail::fmt(height - mb + 20) +
           "\" font-size=\"12\">" + detail::fmt(x_max) + "</text>\n";
    svg += "<text x=\"5\" y=\"" + detail::fmt(height - mb) + "\" font-size=\"12\">" +
           detail::fmt(y_min) + "</text>\n";
    svg += "<text x=\"5\" y=\"" + detail::fmt(mt + 10) + "\" font-size=\"12\">" +
           detail::fmt(y_max) + "</text>\n";
    svg += "<text x=\"" + detail::fmt(width / 2 - 20) + "\" y=\"" + detail::fmt(height - 10) +
           "\" font-size=\"13\">" + opt.x_label + "</text>\n";
    svg += "<text x=\"15\" y=\"" + detail::fmt(height / 2) +
           "\" font-size=\"13\" transform=\"rotate(-90 15 " + detail::fmt(height / 2) + ")\">" +
           opt.y_label + "</text>\n";
    if (!opt.title.empty())
        svg += "<text x=\"" + detail::fmt(ml) + "\" y=\"25\" font-size=\"15\">" + opt.title +
               "</text>\n";

    // fitted curve, 200 log-spaced samples
    if (fit) {
        std::string path = "M";
        const double l0 = std::log10(x_min), l1 = std::log10(x_max);
        for (int i = 0; i < 200; ++i) {
            const double x = std::pow(10.0, l0 + (l1 - l0) * i / 199.0);
            double y = predict(*fit, x);
            y = std::min(std::max(y, log_y ? y_min * 1e-3 : y_min - (y_max - y_min)),
                         y_max * 10.0);
            if (log_y && y <= 0.0) y = y_min * 1e-3;
            path += (i ? " L" : "") + std::string(" ") + detail::fmt(tx(x)) + " " +
                    detail::fmt(ty(y));
        }
        svg += "<path d=\"" + path + "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n";
    }

    for (const auto& p : points)
        svg += "<circle cx=\"" + detail::fmt(tx(p.x)) + "\" cy=\"" + detail::fmt(ty(p.y)) +
               "\" r=\"4\" fill=\"#1f77b4\"/>\n";

    if (fit)
        svg += "<text x=\"" + detail::fmt(width - mr - 120) + "\" y=\"" + detail::fmt(mt + 15) +
               "\" font-size=\"13\">R&#178; = " + detail::fmt(fit->r2) + "</text>\n";
    svg += "</svg>\n";
    return svg;
}

inline std::string render_plot(const std::vector<ScalingPoint>& points, const FitResult& fit,
                               const PlotOptions& opt = {}) {
    return render_plot(points, &fit, opt);
}

inline void emit_plot(const std::vector<ScalingPoint>& points, const FitResult& fit,
                      const PlotOptions& opt, const std::string& path) {
    detail::atomic_write(path, render_plot(points, &fit, opt));
}

inline void emit_plot(const std::vector<ScalingPoint>& points, const FitResult* fit,
                      const PlotOptions& opt, const std::string& path) {
    detail::atomic_write(path, render_plot(points, fit, opt));
}

}  // namespace genret
