#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polyspec/liouville.hpp"

namespace polyspec {

enum class Integrator {
    // Normalised Kraus map M(dy) rho M(dy)^dagger + sum_k rate_k dt c_k rho c_k^dagger with the
    // second-order dy correction; positive by construction.
    kraus,
    // Plain Ito step rho + L(rho) dt + beta S[A](rho) dW.
    euler_maruyama,
};

struct SimConfig {
    LiouvillianSpec spec;
    double dt = 0.0;                 // ms; 0 selects default_dt(spec)
    std::int64_t n_steps = 0;
    std::uint64_t seed = 0;
    std::optional<CMatrix> initial;  // defaults to the steady state
    bool record_latent = false;
    int output_stride = 1;           // integration steps averaged into one output sample
    Integrator integrator = Integrator::kraus;

    // Throws ConfigError on bad sizes, NumericalError when dt violates the stability guard.
    void validate() const;
};

struct TimeTrace {
    double dt = 0.0;                             // sample interval, ms
    std::vector<double> samples;                 // z(t), kHz
    std::optional<std::vector<double>> latent;   // Tr[rho(t) A], block means
    std::string units = "kHz";
    std::uint64_t seed = 0;
    std::string model_hash;
    double min_eigenvalue = 0.0;                 // smallest eigenvalue of rho seen during the run

    void validate() const;
};

// 0.01 / max(rates, beta^2, |H| / 2pi) in ms, capped at 0.05 / max|lambda(L)|.
double default_dt(const LiouvillianSpec& spec);

// FNV-1a of the spec's numeric content, as 16 hex digits.
std::string spec_fingerprint(const LiouvillianSpec& spec);

// Samples z = beta dy / (2 dt) with dy = beta <A + A^dagger> dt + dW, averaged over output_stride
// steps, so the discrete white floor equals beta^2/4 in spectral units. Deterministic per seed.
TimeTrace simulate(const SimConfig& cfg);

// n_traces independent runs with seeds derived from cfg.seed.
std::vector<TimeTrace> ensemble(const SimConfig& cfg, int n_traces);

}  // namespace polyspec
