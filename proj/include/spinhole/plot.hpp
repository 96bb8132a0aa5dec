#pragma once

// Minimal SVG line plots.

#include <string>
#include <vector>

namespace spinhole {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool markers = false;  // draw points instead of a polyline
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<PlotSeries> series;
    bool log_x = false;
    bool log_y = false;
    int width = 720;
    int height = 480;
};

std::string render_svg(const PlotSpec& spec);

}  // namespace spinhole
