#include "polyspec/models.hpp"

#include <cmath>
#include <set>

namespace polyspec {

namespace {

OperatorMatrix op(CMatrix m, std::string label) { return {std::move(m), std::move(label)}; }

CMatrix ket_bra(int d, int row, int col) {
    CMatrix m = CMatrix::Zero(d, d);
    m(row, col) = 1.0;
    return m;
}

void require_nonnegative(double value, const char* name) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw ConfigError(std::string(name) + " must be finite and >= 0");
    }
}

double take(const ParamOverrides& values, const std::string& key) { return values.at(key); }

const std::set<std::string> kSpin3RateKeys{"gamma_0up", "gamma_0down", "gamma_up0", "gamma_down0"};

void check_keys(const ParamOverrides& overrides, const ParamOverrides& known, const std::string& preset) {
    for (const auto& [key, value] : overrides) {
        const bool optional_rate = preset == "spin3" && kSpin3RateKeys.count(key);
        if (!known.count(key) && !optional_rate) {
            throw ConfigError("unknown parameter '" + key + "' for preset '" + preset + "'");
        }
        if (!std::isfinite(value)) throw ConfigError("parameter '" + key + "' is not finite");
    }
}

const ParamOverrides& defaults_for(const std::string& name) {
    // spin3 defaults reproduce rates close to (1.18, 1.24, 0.29, 0.22) kHz at T = 10 K.
    static const ParamOverrides sqd{{"gamma_in", 1.0}, {"gamma_out", 0.5}, {"beta_sq", 1.0}};
    static const ParamOverrides spin3{{"Gamma", 1.586},      {"epsilon", -1.432},  {"Delta", 0.28},
                                      {"temperature", 10.0}, {"d_factor", 10.0 / 11.0},
                                      {"gamma_updown", 2.0}, {"beta_sq", 1.0}};
    static const ParamOverrides doubledot{
        {"g", kPi / 2.0}, {"gamma_in", 0.071}, {"gamma_out", 0.069}, {"beta_sq", 0.1}};
    if (name == "sqd") return sqd;
    if (name == "spin3") return spin3;
    if (name == "doubledot") return doubledot;
    throw ConfigError("unknown model preset '" + name + "' (expected sqd, spin3 or doubledot)");
}

}  // namespace

double fermi(double energy_mev, double temperature_k) {
    if (!(temperature_k > 0.0)) throw ConfigError("temperature must be > 0");
    const double x = energy_mev / (kBoltzmannMeVPerK * temperature_k);
    if (x > 700.0) return 0.0;
    if (x < -700.0) return 1.0;
    return 1.0 / (std::exp(x) + 1.0);
}

LiouvillianSpec sqd_model(const SqdParams& p) {
    require_nonnegative(p.gamma_in, "gamma_in");
    require_nonnegative(p.gamma_out, "gamma_out");
    require_nonnegative(p.beta_sq, "beta_sq");
    LiouvillianSpec spec;
    spec.hilbert = HilbertSpec::from_labels({"0", "1"});
    spec.hamiltonian = op(CMatrix::Zero(2, 2), "H");
    spec.channels = {{op(ket_bra(2, 1, 0), "a^dagger"), p.gamma_in}, {op(ket_bra(2, 0, 1), "a"), p.gamma_out}};
    spec.measurement = op(ket_bra(2, 1, 1), "n");
    spec.beta_sq = p.beta_sq;
    return spec;
}

Spin3Rates spin3_rates(const Spin3Params& p) {
    if (!(p.temperature > 0.0)) throw ConfigError("temperature must be > 0");
    if (!(p.d_factor > 0.0 && p.d_factor <= 1.0)) throw ConfigError("d_factor must lie in (0, 1]");
    require_nonnegative(p.Gamma, "Gamma");
    const double f_up = fermi(p.epsilon + 0.5 * p.Delta, p.temperature);
    const double f_down = fermi(p.epsilon - 0.5 * p.Delta, p.temperature);
    return {p.d_factor * p.Gamma * f_up, p.d_factor * p.Gamma * f_down, p.Gamma * (1.0 - f_up),
            p.Gamma * (1.0 - f_down)};
}

LiouvillianSpec spin3_model_from_rates(const Spin3Rates& r, double gamma_updown, double beta_sq) {
    require_nonnegative(r.in_up, "gamma_0up");
    require_nonnegative(r.in_down, "gamma_0down");
    require_nonnegative(r.out_up, "gamma_up0");
    require_nonnegative(r.out_down, "gamma_down0");
    require_nonnegative(gamma_updown, "gamma_updown");
    require_nonnegative(beta_sq, "beta_sq");
    constexpr int empty = 0, up = 1, down = 2;
    LiouvillianSpec spec;
    spec.hilbert = HilbertSpec::from_labels({"0", "up", "down"});
    spec.hamiltonian = op(CMatrix::Zero(3, 3), "H");
    spec.channels = {
        {op(ket_bra(3, up, empty), "a_up^dagger a_0"), r.in_up},
        {op(ket_bra(3, down, empty), "a_down^dagger a_0"), r.in_down},
        {op(ket_bra(3, empty, up), "a_0^dagger a_up"), r.out_up},
        {op(ket_bra(3, empty, down), "a_0^dagger a_down"), r.out_down},
        {op(ket_bra(3, down, up), "a_down^dagger a_up"), gamma_updown},
    };
    spec.measurement = op(ket_bra(3, up, up) + ket_bra(3, down, down), "n_up + n_down");
    spec.beta_sq = beta_sq;
    return spec;
}

LiouvillianSpec spin3_model(const Spin3Params& p) {
    return spin3_model_from_rates(spin3_rates(p), p.gamma_updown, p.beta_sq);
}

LiouvillianSpec doubledot_model(const DoubleDotParams& p) {
    require_nonnegative(p.g, "g");
    require_nonnegative(p.gamma_in, "gamma_in");
    require_nonnegative(p.gamma_out, "gamma_out");
    require_nonnegative(p.beta_sq, "beta_sq");
    // Index = n1 + 2 n2; Jordan-Wigner with dot 1 first: a1 = sigma^-_1, a2 = (-1)^{n1} sigma^-_2.
    CMatrix a1 = CMatrix::Zero(4, 4);
    a1(0, 1) = 1.0;
    a1(2, 3) = 1.0;
    CMatrix a2 = CMatrix::Zero(4, 4);
    a2(0, 2) = 1.0;
    a2(1, 3) = -1.0;
    const CMatrix hop = a1.adjoint() * a2;
    LiouvillianSpec spec;
    spec.hilbert = HilbertSpec::from_labels({"00", "10", "01", "11"});
    spec.hamiltonian = op(p.g * (hop + hop.adjoint()), "H");
    spec.channels = {{op(a1.adjoint(), "a1^dagger"), p.gamma_in}, {op(a2, "a2"), p.gamma_out}};
    spec.measurement = op(a2.adjoint() * a2, "n2");
    spec.beta_sq = p.beta_sq;
    return spec;
}

ParamOverrides preset_parameters(const std::string& name, const ParamOverrides& overrides) {
    ParamOverrides values = defaults_for(name);
    check_keys(overrides, values, name);
    for (const auto& [key, value] : overrides) values[key] = value;
    return values;
}

LiouvillianSpec model_from_preset(const std::string& name, const ParamOverrides& overrides) {
    const ParamOverrides v = preset_parameters(name, overrides);
    if (name == "sqd") {
        return sqd_model({take(v, "gamma_in"), take(v, "gamma_out"), take(v, "beta_sq")});
    }
    if (name == "doubledot") {
        return doubledot_model({take(v, "g"), take(v, "gamma_in"), take(v, "gamma_out"), take(v, "beta_sq")});
    }
    int given = 0;
    for (const auto& key : kSpin3RateKeys) given += overrides.count(key) ? 1 : 0;
    if (given > 0) {
        if (given != 4) throw ConfigError("spin3 direct rates need all four of gamma_0up, gamma_0down, gamma_up0, gamma_down0");
        return spin3_model_from_rates(
            {take(v, "gamma_0up"), take(v, "gamma_0down"), take(v, "gamma_up0"), take(v, "gamma_down0")},
            take(v, "gamma_updown"), take(v, "beta_sq"));
    }
    Spin3Params p;
    p.Gamma = take(v, "Gamma");
    p.epsilon = take(v, "epsilon");
    p.Delta = take(v, "Delta");
    p.temperature = take(v, "temperature");
    p.d_factor = take(v, "d_factor");
    p.gamma_updown = take(v, "gamma_updown");
    p.beta_sq = take(v, "beta_sq");
    return spin3_model(p);
}

}  // namespace polyspec
