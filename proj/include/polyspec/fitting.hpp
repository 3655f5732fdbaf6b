#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polyspec/models.hpp"
#include "polyspec/spectrum.hpp"

namespace polyspec {

struct FreeParameter {
    std::string name;  // a preset parameter key, e.g. "gamma_in"
    double lower = 0.0;
    double upper = 0.0;
    std::optional<double> initial;
};

enum class Weighting {
    jackknife,       // 1/sigma from the spectra's error blocks (falls back per grid when absent)
    max_normalized,  // every order divided by its max |S|
};

// Model: order n spectrum = scale^n * S_n(params) (+ background for n = 2).
struct FitProblem {
    std::string model = "sqd";
    std::vector<FreeParameter> free;
    ParamOverrides fixed;
    std::vector<SpectrumGrid> data;

    bool fit_scale = true;
    double scale = 1.0;  // start (or fixed value)
    double scale_lower = 0.01;
    double scale_upper = 100.0;  // a negative range selects an inverted detector
    bool fit_background = true;
    double background = 0.0;

    Weighting weighting = Weighting::jackknife;
    bool exclude_dc = true;
    double nyquist_fraction = 0.8;  // applied to grids that carry a sample interval

    int max_evaluations = 4000;
    int restarts = 4;
    int grid_points = 0;  // per free parameter; 0 picks a total near 400

    void validate() const;
};

struct FitResult {
    std::string model;
    std::map<std::string, double> parameters;    // free and fixed, resolved
    std::map<std::string, double> uncertainties; // free parameters and fitted nuisances
    double scale = 1.0;
    double background = 0.0;
    std::map<int, double> chi_square;            // per order
    std::map<int, int> points;                   // per order
    std::map<int, double> relative_residual;     // ||model - data|| / ||data|| per order
    double objective = 0.0;
    std::vector<std::string> covariance_labels;
    RMatrix covariance;
    double condition_number = 0.0;
    bool covariance_singular = false;
    std::map<std::string, double> degenerate_direction;  // weakest eigenvector when singular
    bool converged = false;
    int evaluations = 0;
    std::string message;
};

FitResult fit(const FitProblem& problem);

// Spin3 fit over a subset of (Gamma, epsilon, gamma_updown); the tunnelling rates follow from the
// Fermi-function parameterisation with Delta, temperature and d_factor held fixed.
FitResult fit_spin3(const FitProblem& problem);

}  // namespace polyspec
