#include "polyspec/spectrum.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

namespace polyspec {

void SpectrumGrid::validate() const {
    if (order < 2 || order > 4) throw ConfigError("spectrum order must be 2, 3 or 4");
    const auto n1 = static_cast<Eigen::Index>(axis1.size());
    const auto n2 = static_cast<Eigen::Index>(axis2.size());
    if (order == 2 && n2 != 0) throw ConfigError("order-2 spectrum must not have a second axis");
    const Eigen::Index cols = order == 2 ? 1 : n2;
    if (values.rows() != n1 || values.cols() != cols) {
        throw ConfigError("spectrum values shape " + std::to_string(values.rows()) + "x" +
                          std::to_string(values.cols()) + " does not match its axes");
    }
    if (!values.allFinite()) throw ConfigError("spectrum contains non-finite values");
    for (const auto* extra : {&imag, &errors}) {
        if (*extra && ((*extra)->rows() != values.rows() || (*extra)->cols() != values.cols())) {
            throw ConfigError("spectrum diagnostics shape does not match values");
        }
    }
}

}  // namespace polyspec

namespace polyspec {

SpectrumGrid full_plane(const SpectrumGrid& grid) {
    grid.validate();
    if (grid.order == 2 || grid.axis1.empty() || grid.axis1 != grid.axis2 || grid.axis1.front() != 0.0) return grid;
    for (double w : grid.axis1) {
        if (w < 0.0) return grid;
    }
    const int kmax = static_cast<int>(grid.axis1.size()) - 1;
    const int n = 2 * kmax + 1;
    SpectrumGrid out;
    out.order = grid.order;
    out.source = grid.source;
    out.units = grid.units;
    out.frames = grid.frames;
    out.sample_dt = grid.sample_dt;
    out.overlapping_frames = grid.overlapping_frames;
    for (int i = -kmax; i <= kmax; ++i) {
        out.axis1.push_back(i < 0 ? -grid.axis1[static_cast<std::size_t>(-i)] : grid.axis1[static_cast<std::size_t>(i)]);
    }
    out.axis2 = out.axis1;
    out.values.resize(n, n);
    for (int i = -kmax; i <= kmax; ++i) {
        for (int j = -kmax; j <= kmax; ++j) {
            double v = std::numeric_limits<double>::quiet_NaN();
            if (grid.order == 4) {
                v = grid.values(std::abs(i), std::abs(j));
            } else {
                // Re S3 is invariant under permutations of (k, l, -k-l) and under a global sign flip.
                int f[3] = {i, j, -i - j};
                int nonneg = 0;
                for (int x : f) nonneg += x >= 0;
                if (nonneg < 2) {
                    for (int& x : f) x = -x;
                }
                int a = -1, b = -1;
                for (int x : f) {
                    if (x < 0) continue;
                    if (a < 0) a = x;
                    else if (b < 0) b = x;
                }
                if (a <= kmax && b <= kmax) v = grid.values(a, b);
            }
            out.values(i + kmax, j + kmax) = v;
        }
    }
    return out;
}

}  // namespace polyspec
