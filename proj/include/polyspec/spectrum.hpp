#pragma once

#include <optional>
#include <string>
#include <vector>

#include "polyspec/types.hpp"

namespace polyspec {

// An evaluated polyspectrum on a frequency grid (angular frequencies in rad*kHz).
// Order 2: values is axis1.size() x 1 and axis2 is empty.
// Order 3: S3(axis1[i], axis2[j]).  Order 4: the cut S4(axis1[i], -axis1[i], axis2[j]).
struct SpectrumGrid {
    int order = 2;
    std::vector<double> axis1;
    std::vector<double> axis2;
    RMatrix values;
    std::optional<RMatrix> imag;    // imaginary parts (estimator diagnostics, complex bispectra)
    std::optional<RMatrix> errors;  // jackknife standard errors of `values`
    std::string source = "analytic";
    std::string units = "kHz";
    int frames = 0;                 // number of frames behind an estimate
    double sample_dt = 0.0;         // ms; trace sample interval of an estimate (0 for analytic)
    bool overlapping_frames = false;  // frame stride < frame length: errors are biased low

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
    // Throws ConfigError when shapes disagree or values are not finite.
    void validate() const;
};

// Expands a first-quadrant order-3/4 estimate (axes omega_k = k * d omega, k >= 0) to the full
// plane using the symmetries of real signals. Bispectrum points whose first-quadrant image lies
// outside the grid are NaN. Grids that already contain negative frequencies are returned as is.
SpectrumGrid full_plane(const SpectrumGrid& grid);

}  // namespace polyspec
