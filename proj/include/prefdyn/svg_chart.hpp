#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace prefdyn {

// Figure-2 series color convention.
inline constexpr const char* kColorChosenAvg = "#1f77b4";   // blue
inline constexpr const char* kColorChosenMin = "#e6b800";   // yellow
inline constexpr const char* kColorRejectedAvg = "#2ca02c"; // green
inline constexpr const char* kColorRejectedMax = "#d62728"; // red
inline constexpr const char* kColorUnseenAvg = "#9467bd";   // purple

struct ChartSeries {
    std::string label;
    std::string color;
    std::vector<std::pair<double, double>> points;
};

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    int width = 640;
    int height = 420;
};

namespace svgdetail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline double nice_step(double span, int target_ticks) {
    const double raw = span / target_ticks;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= m * mag) return m * mag;
    }
    return 10.0 * mag;
}

} // namespace svgdetail

// One panel's worth of SVG markup at the given origin. Series are drawn as
// polylines over linear or log10 y; nonpositive values on a log axis are
// floored at 1e-16.
inline std::string render_chart_group(const ChartSpec& spec, const std::vector<ChartSeries>& series,
                                      double origin_x, double origin_y) {
    using svgdetail::num;
    const double ml = 62, mr = 14, mt = 34, mb = 44; // margins
    const double pw = spec.width - ml - mr;
    const double ph = spec.height - mt - mb;
    constexpr double kLogFloor = 1e-16;

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series) {
        for (auto [x, y] : s.points) {
            double yy = spec.log_y ? std::log10(std::max(y, kLogFloor)) : y;
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, yy);
            ymax = std::max(ymax, yy);
        }
    }
    if (xmin > xmax) { xmin = 0; xmax = 1; ymin = 0; ymax = 1; }
    if (xmax - xmin < 1e-12) { xmin -= 0.5; xmax += 0.5; }
    if (ymax - ymin < 1e-12) { ymin -= 0.5; ymax += 0.5; }

    auto px = [&](double x) { return origin_x + ml + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double yy) { return origin_y + mt + ph - (yy - ymin) / (ymax - ymin) * ph; };

    std::string out;
    out += "<g font-family=\"Helvetica,Arial,sans-serif\" font-size=\"11\">\n";
    out += "<rect x=\"" + num(origin_x + ml) + "\" y=\"" + num(origin_y + mt) + "\" width=\"" + num(pw) +
           "\" height=\"" + num(ph) + "\" fill=\"white\" stroke=\"#888\"/>\n";

    // x ticks
    const double xstep = svgdetail::nice_step(xmax - xmin, 5);
    for (double t = std::ceil(xmin / xstep) * xstep; t <= xmax + 1e-9 * xstep; t += xstep) {
        const double x = px(t);
        out += "<line x1=\"" + num(x) + "\" y1=\"" + num(origin_y + mt + ph) + "\" x2=\"" + num(x) +
               "\" y2=\"" + num(origin_y + mt + ph + 4) + "\" stroke=\"#444\"/>\n";
        out += "<text x=\"" + num(x) + "\" y=\"" + num(origin_y + mt + ph + 16) +
               "\" text-anchor=\"middle\">" + num(t) + "</text>\n";
    }
    // y ticks
    if (spec.log_y) {
        for (double d = std::ceil(ymin); d <= std::floor(ymax) + 1e-9; d += 1.0) {
            const double y = py(d);
            out += "<line x1=\"" + num(origin_x + ml - 4) + "\" y1=\"" + num(y) + "\" x2=\"" +
                   num(origin_x + ml) + "\" y2=\"" + num(y) + "\" stroke=\"#444\"/>\n";
            out += "<text x=\"" + num(origin_x + ml - 6) + "\" y=\"" + num(y + 4) +
                   "\" text-anchor=\"end\">1e" + num(d) + "</text>\n";
        }
    } else {
        const double ystep = svgdetail::nice_step(ymax - ymin, 5);
        for (double t = std::ceil(ymin / ystep) * ystep; t <= ymax + 1e-9 * ystep; t += ystep) {
            const double y = py(t);
            out += "<line x1=\"" + num(origin_x + ml - 4) + "\" y1=\"" + num(y) + "\" x2=\"" +
                   num(origin_x + ml) + "\" y2=\"" + num(y) + "\" stroke=\"#444\"/>\n";
            out += "<text x=\"" + num(origin_x + ml - 6) + "\" y=\"" + num(y + 4) +
                   "\" text-anchor=\"end\">" + num(t) + "</text>\n";
        }
    }

    for (const auto& s : series) {
        out += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.5\" points=\"";
        for (auto [x, y] : s.points) {
            const double yy = spec.log_y ? std::log10(std::max(y, kLogFloor)) : y;
            out += num(px(x)) + "," + num(py(yy)) + " ";
        }
        out += "\"/>\n";
    }

    // legend, top-right inside the plot
    double ly = origin_y + mt + 12;
    for (const auto& s : series) {
        const double lx = origin_x + ml + pw - 150;
        out += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly - 3) + "\" x2=\"" + num(lx + 18) +
               "\" y2=\"" + num(ly - 3) + "\" stroke=\"" + s.color + "\" stroke-width=\"2\"/>\n";
        out += "<text x=\"" + num(lx + 23) + "\" y=\"" + num(ly) + "\">" + s.label + "</text>\n";
        ly += 14;
    }

    out += "<text x=\"" + num(origin_x + ml + pw / 2) + "\" y=\"" + num(origin_y + 16) +
           "\" text-anchor=\"middle\" font-size=\"13\">" + spec.title + "</text>\n";
    out += "<text x=\"" + num(origin_x + ml + pw / 2) + "\" y=\"" + num(origin_y + mt + ph + 32) +
           "\" text-anchor=\"middle\">" + spec.x_label + "</text>\n";
    out += "<text x=\"" + num(origin_x + 14) + "\" y=\"" + num(origin_y + mt + ph / 2) +
           "\" text-anchor=\"middle\" transform=\"rotate(-90 " + num(origin_x + 14) + " " +
           num(origin_y + mt + ph / 2) + ")\">" + spec.y_label + "</text>\n";
    out += "</g>\n";
    return out;
}

inline std::string svg_document(double width, double height, const std::string& body) {
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svgdetail::num(width) +
           "\" height=\"" + svgdetail::num(height) + "\" viewBox=\"0 0 " + svgdetail::num(width) +
           " " + svgdetail::num(height) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += body;
    out += "</svg>\n";
    return out;
}

inline std::string render_chart_svg(const ChartSpec& spec, const std::vector<ChartSeries>& series) {
    return svg_document(spec.width, spec.height, render_chart_group(spec, series, 0, 0));
}

// Several panels side by side in one document.
inline std::string render_panel_row_svg(const std::vector<ChartSpec>& specs,
                                        const std::vector<std::vector<ChartSeries>>& panel_series) {
    if (specs.size() != panel_series.size()) throw std::invalid_argument("render_panel_row_svg: size mismatch");
    double width = 0, height = 0;
    for (const auto& s : specs) {
        width += s.width;
        height = std::max(height, static_cast<double>(s.height));
    }
    std::string body;
    double x = 0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        body += render_chart_group(specs[i], panel_series[i], x, 0);
        x += specs[i].width;
    }
    return svg_document(width, height, body);
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_text_file: cannot open " + path);
    out << content;
}

} // namespace prefdyn
