#pragma once

#include <map>
#include <string>

#include "polyspec/liouville.hpp"

// Constructors for the three quantum-dot systems. Basis orderings are fixed:
//   sqd        (|0>, |1>)
//   spin3      (|0>, |up>, |down>)
//   doubledot  (|00>, |10>, |01>, |11>)   occupations (n1, n2)
namespace polyspec {

inline constexpr double kBoltzmannMeVPerK = 0.08617;

struct SqdParams {
    double gamma_in = 1.0;   // kHz
    double gamma_out = 0.5;  // kHz
    double beta_sq = 1.0;    // kHz
};

struct Spin3Params {
    double Gamma = 1.0;            // tunnel coupling, kHz
    double epsilon = 0.0;          // dot level relative to the chemical potential, meV
    double Delta = 0.0;            // Zeeman splitting, meV
    double temperature = 10.0;     // K
    double d_factor = 10.0 / 11.0;
    double gamma_updown = 0.0;     // spin relaxation up -> down, kHz
    double beta_sq = 1.0;          // kHz
};

struct Spin3Rates {
    double in_up = 0.0;     // gamma_{0 up}
    double in_down = 0.0;   // gamma_{0 down}
    double out_up = 0.0;    // gamma_{up 0}
    double out_down = 0.0;  // gamma_{down 0}
};

struct DoubleDotParams {
    double g = kPi / 2.0;     // coherent hopping, rad*kHz
    double gamma_in = 0.071;  // onto dot 1, kHz
    double gamma_out = 0.069; // from dot 2, kHz
    double beta_sq = 0.1;     // kHz
};

// Fermi function 1/(exp(x/kT)+1), clamped to 0/1 once |x/kT| > 700.
double fermi(double energy_mev, double temperature_k);

LiouvillianSpec sqd_model(const SqdParams& p);

Spin3Rates spin3_rates(const Spin3Params& p);
LiouvillianSpec spin3_model(const Spin3Params& p);
LiouvillianSpec spin3_model_from_rates(const Spin3Rates& rates, double gamma_updown, double beta_sq);

LiouvillianSpec doubledot_model(const DoubleDotParams& p);

// Named presets ("sqd", "spin3", "doubledot") with key=value overrides. The spin3 preset
// switches to direct rates when any of gamma_0up, gamma_0down, gamma_up0, gamma_down0 is set.
// Throws ConfigError for unknown presets or keys.
using ParamOverrides = std::map<std::string, double>;
LiouvillianSpec model_from_preset(const std::string& name, const ParamOverrides& overrides = {});

// Fully resolved parameter set of a preset (defaults merged with overrides).
ParamOverrides preset_parameters(const std::string& name, const ParamOverrides& overrides = {});

}  // namespace polyspec
