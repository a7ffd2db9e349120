#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "boxplus/errors.hpp"

namespace boxplus {

// Static vector-graphics plots, written directly as SVG so runs leave
// behind inspectable artifacts without any plotting dependency. Layout
// constants are fixed; the output for a given input is byte-stable.

struct SvgSeries {
    std::string label;
    std::string color;  // any CSS color
    std::vector<std::pair<double, double>> points;
};

namespace detail {

constexpr double svg_w = 820.0, svg_h = 520.0;
constexpr double svg_l = 72.0, svg_r = 24.0, svg_t = 42.0, svg_b = 56.0;

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline void svg_header(std::ostream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg_w
        << "\" height=\"" << svg_h << "\" viewBox=\"0 0 " << svg_w << ' '
        << svg_h << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << svg_w / 2 << "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"15\">"
        << title << "</text>\n";
}

inline void svg_axis_labels(std::ostream& out, const std::string& x_label,
                            const std::string& y_label) {
    out << "<text x=\"" << (svg_l + (svg_w - svg_l - svg_r) / 2) << "\" y=\""
        << (svg_h - 12) << "\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"13\">" << x_label
        << "</text>\n"
        << "<text x=\"18\" y=\"" << (svg_t + (svg_h - svg_t - svg_b) / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\" transform=\"rotate(-90 18 "
        << (svg_t + (svg_h - svg_t - svg_b) / 2) << ")\">" << y_label
        << "</text>\n";
}

}  // namespace detail

// Log-log scatter-and-line plot. Points with a nonpositive coordinate
// are dropped (they have no logarithm); a series that loses all its
// points is skipped. Throws if nothing remains to draw.
inline void svg_loglog(std::ostream& out,
                       const std::vector<SvgSeries>& series,
                       const std::string& title, const std::string& x_label,
                       const std::string& y_label) {
    using namespace detail;

    double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            if (!(x > 0.0) || !(y > 0.0)) continue;
            x_min = std::min(x_min, std::log10(x));
            x_max = std::max(x_max, std::log10(x));
            y_min = std::min(y_min, std::log10(y));
            y_max = std::max(y_max, std::log10(y));
        }
    if (x_min > x_max) throw DomainError("no positive data to plot");
    if (x_max - x_min < 1e-9) x_min -= 0.5, x_max += 0.5;
    if (y_max - y_min < 1e-9) y_min -= 0.5, y_max += 0.5;

    const double pw = svg_w - svg_l - svg_r, ph = svg_h - svg_t - svg_b;
    auto px = [&](double lx) {
        return svg_l + pw * (lx - x_min) / (x_max - x_min);
    };
    auto py = [&](double ly) {
        return svg_t + ph * (y_max - ly) / (y_max - y_min);
    };

    svg_header(out, title);

    // Decade grid lines and tick labels on both axes.
    for (int d = int(std::ceil(x_min)); d <= int(std::floor(x_max)); ++d) {
        const double x = px(double(d));
        out << "<line x1=\"" << fmt(x) << "\" y1=\"" << svg_t << "\" x2=\""
            << fmt(x) << "\" y2=\"" << (svg_t + ph)
            << "\" stroke=\"#dddddd\"/>\n"
            << "<text x=\"" << fmt(x) << "\" y=\"" << (svg_t + ph + 18)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"11\">1e"
            << d << "</text>\n";
    }
    for (int d = int(std::ceil(y_min)); d <= int(std::floor(y_max)); ++d) {
        const double y = py(double(d));
        out << "<line x1=\"" << svg_l << "\" y1=\"" << fmt(y) << "\" x2=\""
            << (svg_l + pw) << "\" y2=\"" << fmt(y)
            << "\" stroke=\"#dddddd\"/>\n"
            << "<text x=\"" << (svg_l - 6) << "\" y=\"" << fmt(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
               "font-size=\"11\">1e"
            << d << "</text>\n";
    }
    out << "<rect x=\"" << svg_l << "\" y=\"" << svg_t << "\" width=\"" << pw
        << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";

    double legend_y = svg_t + 16.0;
    for (const auto& s : series) {
        std::string poly;
        for (const auto& [x, y] : s.points) {
            if (!(x > 0.0) || !(y > 0.0)) continue;
            poly += fmt(px(std::log10(x)));
            poly += ',';
            poly += fmt(py(std::log10(y)));
            poly += ' ';
        }
        if (poly.empty()) continue;
        out << "<polyline points=\"" << poly
            << "\" fill=\"none\" stroke=\"" << s.color
            << "\" stroke-width=\"1.5\"/>\n";
        for (const auto& [x, y] : s.points) {
            if (!(x > 0.0) || !(y > 0.0)) continue;
            out << "<circle cx=\"" << fmt(px(std::log10(x))) << "\" cy=\""
                << fmt(py(std::log10(y))) << "\" r=\"2.5\" fill=\""
                << s.color << "\"/>\n";
        }
        out << "<rect x=\"" << (svg_l + pw - 150) << "\" y=\""
            << fmt(legend_y - 9) << "\" width=\"10\" height=\"10\" fill=\""
            << s.color << "\"/>\n"
            << "<text x=\"" << (svg_l + pw - 136) << "\" y=\""
            << fmt(legend_y) << "\" font-family=\"sans-serif\" "
               "font-size=\"12\">"
            << s.label << "</text>\n";
        legend_y += 16.0;
    }

    svg_axis_labels(out, x_label, y_label);
    out << "</svg>\n";
}

// Histogram of a sample against a reference density curve: the standard
// picture for an empirical spectrum next to the free convolution that
// predicts it.
inline void svg_density_overlay(std::ostream& out,
                                const std::vector<double>& samples,
                                std::size_t n_bins,
                                const SvgSeries& curve,
                                const std::string& title) {
    using namespace detail;
    if (samples.empty()) throw DomainError("no samples to plot");
    if (n_bins < 1) throw DomainError("need at least one bin");

    double lo = *std::min_element(samples.begin(), samples.end());
    double hi = *std::max_element(samples.begin(), samples.end());
    for (const auto& [x, y] : curve.points) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    const double pad = 0.02 * (hi - lo);
    lo -= pad, hi += pad;

    // Unit-mass histogram.
    const double bin_w = (hi - lo) / double(n_bins);
    std::vector<double> bins(n_bins, 0.0);
    for (double v : samples) {
        auto b = std::size_t(std::min(
            double(n_bins) - 1.0, std::max(0.0, (v - lo) / bin_w)));
        bins[b] += 1.0;
    }
    for (double& b : bins) b /= double(samples.size()) * bin_w;

    double y_max = *std::max_element(bins.begin(), bins.end());
    for (const auto& [x, y] : curve.points) y_max = std::max(y_max, y);
    y_max *= 1.08;

    const double pw = svg_w - svg_l - svg_r, ph = svg_h - svg_t - svg_b;
    auto px = [&](double x) { return svg_l + pw * (x - lo) / (hi - lo); };
    auto py = [&](double y) { return svg_t + ph * (1.0 - y / y_max); };

    svg_header(out, title);
    out << "<rect x=\"" << svg_l << "\" y=\"" << svg_t << "\" width=\"" << pw
        << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";

    // A handful of x ticks at round positions.
    for (int t = 0; t <= 4; ++t) {
        const double x = lo + (hi - lo) * double(t) / 4.0;
        out << "<text x=\"" << fmt(px(x)) << "\" y=\"" << (svg_t + ph + 18)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"11\">"
            << fmt(x) << "</text>\n";
    }

    for (std::size_t b = 0; b < n_bins; ++b) {
        if (bins[b] <= 0.0) continue;
        const double x0 = px(lo + double(b) * bin_w);
        const double x1 = px(lo + double(b + 1) * bin_w);
        out << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(py(bins[b]))
            << "\" width=\"" << fmt(x1 - x0) << "\" height=\""
            << fmt(svg_t + ph - py(bins[b]))
            << "\" fill=\"#9ecae1\" stroke=\"#6baed6\"/>\n";
    }

    std::string poly;
    for (const auto& [x, y] : curve.points) {
        poly += fmt(px(x));
        poly += ',';
        poly += fmt(py(std::min(y, y_max)));
        poly += ' ';
    }
    if (!poly.empty())
        out << "<polyline points=\"" << poly
            << "\" fill=\"none\" stroke=\"" << curve.color
            << "\" stroke-width=\"2\"/>\n";

    out << "<rect x=\"" << (svg_l + pw - 190) << "\" y=\"" << (svg_t + 7)
        << "\" width=\"10\" height=\"10\" fill=\"#9ecae1\"/>\n"
        << "<text x=\"" << (svg_l + pw - 176) << "\" y=\"" << (svg_t + 16)
        << "\" font-family=\"sans-serif\" font-size=\"12\">empirical "
           "histogram</text>\n"
        << "<rect x=\"" << (svg_l + pw - 190) << "\" y=\"" << (svg_t + 23)
        << "\" width=\"10\" height=\"10\" fill=\"" << curve.color
        << "\"/>\n"
        << "<text x=\"" << (svg_l + pw - 176) << "\" y=\"" << (svg_t + 32)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << curve.label
        << "</text>\n";

    svg_axis_labels(out, "E", "density");
    out << "</svg>\n";
}

}  // namespace boxplus
