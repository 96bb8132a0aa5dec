#include "spinhole/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "spinhole/error.hpp"

namespace spinhole {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};

std::string escape(const std::string& s) {
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

struct Axis {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    bool log = false;

    double map(double v) const { return log ? std::log10(v) : v; }
    void include(double v) {
        if (!std::isfinite(v) || (log && v <= 0.0)) return;
        lo = std::min(lo, map(v));
        hi = std::max(hi, map(v));
    }
    void finalize() {
        if (!(lo <= hi)) lo = 0.0, hi = 1.0;
        if (hi == lo) {
            const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
            lo -= pad;
            hi += pad;
        }
    }
    std::vector<double> ticks() const {
        if (log) {
            std::vector<double> t;
            for (double e = std::ceil(lo); e <= std::floor(hi); e += 1.0) t.push_back(e);
            if (!t.empty()) return t;
        }
        const double raw = (hi - lo) / 5.0;
        const double mag = std::pow(10.0, std::floor(std::log10(raw)));
        const double frac = raw / mag;
        const double step = (frac < 1.5 ? 1.0 : frac < 3.5 ? 2.0 : frac < 7.5 ? 5.0 : 10.0) * mag;
        std::vector<double> t;
        for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(v);
        return t;
    }
    std::string label(double mapped) const {
        return log ? fmt::format("1e{:g}", mapped) : fmt::format("{:.4g}", std::abs(mapped) < 1e-300 ? 0.0 : mapped);
    }
};

}  // namespace

std::string render_svg(const PlotSpec& spec) {
    if (spec.width < 200 || spec.height < 150) fail(ErrorCategory::invalid_config, "plot is too small");
    Axis ax{.log = spec.log_x}, ay{.log = spec.log_y};
    for (const auto& s : spec.series) {
        if (s.x.size() != s.y.size()) fail(ErrorCategory::invalid_state, fmt::format("series '{}' has ragged data", s.label));
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i]) || (ay.log && s.y[i] <= 0.0)) continue;
            ax.include(s.x[i]);
            ay.include(s.y[i]);
        }
    }
    ax.finalize();
    ay.finalize();

    const double left = 80, right = 20, top = 40, bottom = 60;
    const double pw = spec.width - left - right, ph = spec.height - top - bottom;
    auto px = [&](double v) { return left + (ax.map(v) - ax.lo) / (ax.hi - ax.lo) * pw; };
    auto py = [&](double v) { return top + ph - (ay.map(v) - ay.lo) / (ay.hi - ay.lo) * ph; };

    std::string out = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n",
        spec.width, spec.height);
    out += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", spec.width, spec.height);
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", left,
                       top, pw, ph);
    for (double t : ax.ticks()) {
        const double x = left + (t - ax.lo) / (ax.hi - ax.lo) * pw;
        out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"black\"/>\n", x,
                           top + ph, top + ph + 5);
        out += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", x, top + ph + 18,
                           escape(ax.label(t)));
    }
    for (double t : ay.ticks()) {
        const double y = top + ph - (t - ay.lo) / (ay.hi - ay.lo) * ph;
        out += fmt::format("<line x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\" stroke=\"black\"/>\n", left - 5, y,
                           left, y);
        out += fmt::format("<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", left - 8, y + 4,
                           escape(ay.label(t)));
    }
    out += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                       left + pw / 2, escape(spec.title));
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", left + pw / 2,
                       spec.height - 15, escape(spec.x_label));
    out += fmt::format("<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0})\">{1}</text>\n",
                       top + ph / 2, escape(spec.y_label));

    for (std::size_t k = 0; k < spec.series.size(); ++k) {
        const auto& s = spec.series[k];
        const char* colour = kPalette[k % std::size(kPalette)];
        std::string points;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i]) || (ay.log && s.y[i] <= 0.0) || (ax.log && s.x[i] <= 0.0)) continue;
            if (s.markers) {
                out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"{}\"/>\n", px(s.x[i]),
                                   py(s.y[i]), colour);
            } else {
                points += fmt::format("{:.2f},{:.2f} ", px(s.x[i]), py(s.y[i]));
            }
        }
        if (!points.empty()) {
            out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", colour,
                               points);
        }
        if (!s.label.empty()) {
            const double ly = top + 16 + 16 * static_cast<double>(k);
            out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
                               left + pw - 150, ly - 4, left + pw - 130, colour);
            out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", left + pw - 125, ly, escape(s.label));
        }
    }
    out += "</svg>\n";
    return out;
}

}  // namespace spinhole
