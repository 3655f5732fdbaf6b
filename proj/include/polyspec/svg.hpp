#pragma once

#include <string>

#include "polyspec/spectrum.hpp"

namespace polyspec {

struct Rgb {
    int r = 0, g = 0, b = 0;
};

// Diverging scale on t in [-1, 1]: blue for negative, white at 0, red for positive.
Rgb diverging_color(double t);

// Line plot of S2 against f = omega / 2 pi.
std::string svg_line_plot(const SpectrumGrid& grid, const std::string& title);

// Heatmap with a colour scale symmetric about zero; NaN cells are drawn grey.
std::string svg_heatmap(const SpectrumGrid& grid, const std::string& title);

// Line plot for order 2, full-plane heatmap otherwise. Output depends only on the inputs.
std::string svg_plot(const SpectrumGrid& grid, const std::string& title);

}  // namespace polyspec
