#include "polyspec/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace polyspec {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 480;
constexpr int kLeft = 80, kRight = 110, kTop = 40, kBottom = 60;

std::string num(double v, int digits = 2) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string tick(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

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

std::string hex(const Rgb& c) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c.r, c.g, c.b);
    return buf;
}

void header(std::ostringstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"#ffffff\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n";
}

void axes(std::ostringstream& out, double x0, double x1, double y0, double y1, const std::string& xlabel,
          const std::string& ylabel) {
    const int pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"#000000\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = x0 + (x1 - x0) * i / 4.0;
        const double px = kLeft + pw * i / 4.0;
        out << "<line x1=\"" << num(px) << "\" y1=\"" << kTop + ph << "\" x2=\"" << num(px) << "\" y2=\"" << kTop + ph + 5
            << "\" stroke=\"#000000\"/>\n";
        out << "<text x=\"" << num(px) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">" << tick(fx) << "</text>\n";
        const double fy = y0 + (y1 - y0) * i / 4.0;
        const double py = kTop + ph - ph * i / 4.0;
        out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << num(py) << "\" x2=\"" << kLeft << "\" y2=\"" << num(py)
            << "\" stroke=\"#000000\"/>\n";
        out << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(py + 4) << "\" text-anchor=\"end\">" << tick(fy) << "</text>\n";
    }
    out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">" << escape(xlabel)
        << "</text>\n";
    out << "<text x=\"18\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << kTop + ph / 2
        << ")\">" << escape(ylabel) << "</text>\n";
}

}  // namespace

Rgb diverging_color(double t) {
    if (!std::isfinite(t)) return {160, 160, 160};
    t = std::clamp(t, -1.0, 1.0);
    auto mix = [](int from, int to, double s) { return static_cast<int>(std::lround(from + (to - from) * s)); };
    if (t >= 0.0) return {mix(255, 178, t), mix(255, 24, t), mix(255, 43, t)};
    const double s = -t;
    return {mix(255, 33, s), mix(255, 102, s), mix(255, 172, s)};
}

std::string svg_line_plot(const SpectrumGrid& grid, const std::string& title) {
    grid.validate();
    std::ostringstream out;
    header(out, title);
    std::vector<double> f;
    for (double w : grid.axis1) f.push_back(w / kTwoPi);
    double x0 = *std::min_element(f.begin(), f.end()), x1 = *std::max_element(f.begin(), f.end());
    if (x1 <= x0) x1 = x0 + 1.0;
    double y0 = std::min(0.0, grid.values.minCoeff()), y1 = grid.values.maxCoeff();
    if (grid.errors) y1 = std::max(y1, (grid.values + *grid.errors).maxCoeff());
    if (y1 <= y0) y1 = y0 + 1.0;
    y1 += 0.05 * (y1 - y0);
    axes(out, x0, x1, y0, y1, "f (kHz)", "S2 (kHz^-1)");
    const int pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + pw * (x - x0) / (x1 - x0); };
    auto py = [&](double y) { return kTop + ph - ph * (y - y0) / (y1 - y0); };
    if (grid.errors) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            out << "<line x1=\"" << num(px(f[i])) << "\" y1=\"" << num(py(grid.values(k, 0) - (*grid.errors)(k, 0)))
                << "\" x2=\"" << num(px(f[i])) << "\" y2=\"" << num(py(grid.values(k, 0) + (*grid.errors)(k, 0)))
                << "\" stroke=\"#9ecae1\"/>\n";
        }
    }
    out << "<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < f.size(); ++i) {
        out << (i ? " " : "") << num(px(f[i])) << "," << num(py(grid.values(static_cast<Eigen::Index>(i), 0)));
    }
    out << "\"/>\n</svg>\n";
    return out.str();
}

std::string svg_heatmap(const SpectrumGrid& grid, const std::string& title) {
    if (grid.order == 2) throw ConfigError("heatmaps need an order-3 or order-4 spectrum");
    std::ostringstream out;
    header(out, title);
    const auto rows = grid.values.rows(), cols = grid.values.cols();
    double vmax = 0.0;
    for (Eigen::Index i = 0; i < grid.values.size(); ++i) {
        if (std::isfinite(grid.values(i))) vmax = std::max(vmax, std::abs(grid.values(i)));
    }
    if (vmax == 0.0) vmax = 1.0;
    const double x0 = grid.axis1.front() / kTwoPi, x1 = grid.axis1.back() / kTwoPi;
    const double y0 = grid.axis2.front() / kTwoPi, y1 = grid.axis2.back() / kTwoPi;
    const int pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    const double cw = static_cast<double>(pw) / static_cast<double>(rows);
    const double ch = static_cast<double>(ph) / static_cast<double>(cols);
    // axis1 runs along x, axis2 along y (upwards).
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            const double v = grid.values(i, j);
            out << "<rect x=\"" << num(kLeft + cw * static_cast<double>(i)) << "\" y=\""
                << num(kTop + ph - ch * static_cast<double>(j + 1)) << "\" width=\"" << num(cw + 0.05) << "\" height=\""
                << num(ch + 0.05) << "\" fill=\"" << hex(diverging_color(v / vmax)) << "\"/>\n";
        }
    }
    auto half = [](double a, double b, Eigen::Index n) { return n > 1 ? 0.5 * (b - a) / static_cast<double>(n - 1) : 0.5; };
    axes(out, x0 - half(x0, x1, rows), x1 + half(x0, x1, rows), y0 - half(y0, y1, cols), y1 + half(y0, y1, cols),
         "f1 (kHz)", "f2 (kHz)");
    // colour bar
    const int bx = kWidth - kRight + 25, bw = 18;
    constexpr int kSteps = 64;
    for (int s = 0; s < kSteps; ++s) {
        const double t = 1.0 - 2.0 * (s + 0.5) / kSteps;
        out << "<rect x=\"" << bx << "\" y=\"" << num(kTop + ph * s / static_cast<double>(kSteps)) << "\" width=\"" << bw
            << "\" height=\"" << num(ph / static_cast<double>(kSteps) + 0.05) << "\" fill=\"" << hex(diverging_color(t))
            << "\"/>\n";
    }
    out << "<text x=\"" << bx + bw + 4 << "\" y=\"" << kTop + 10 << "\">" << tick(vmax) << "</text>\n";
    out << "<text x=\"" << bx + bw + 4 << "\" y=\"" << kTop + ph / 2 + 4 << "\">0</text>\n";
    out << "<text x=\"" << bx + bw + 4 << "\" y=\"" << kTop + ph << "\">" << tick(-vmax) << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

std::string svg_plot(const SpectrumGrid& grid, const std::string& title) {
    if (grid.order == 2) return svg_line_plot(grid, title);
    return svg_heatmap(full_plane(grid), title);
}

}  // namespace polyspec
