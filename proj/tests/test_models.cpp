#include <doctest.h>

#include <cmath>
#include <vector>

#include "polyspec/analytic.hpp"
#include "polyspec/models.hpp"

using namespace polyspec;

namespace {

constexpr double kBohrMagnetonMeVPerT = 0.05788;

// Largest relative deviation of S2 (minus the floor), S3 and S4 between two specs on a small grid.
double spectral_distance(const LiouvillianSpec& a, const LiouvillianSpec& b) {
    const QuantumPolyspectra pa(a), pb(b);
    const std::vector<double> w = symmetric_grid(3.0, 7);
    double num = 0.0, den = 0.0;
    auto acc = [&](double x, double y) {
        num = std::max(num, std::abs(x - y));
        den = std::max(den, std::abs(y));
    };
    for (double w1 : w) {
        acc(pa.s2(w1) - a.beta_sq / 4.0, pb.s2(w1) - b.beta_sq / 4.0);
    }
    const double n2 = num / den;
    num = den = 0.0;
    for (double w1 : w) {
        for (double w2 : w) acc(pa.s3(w1, w2).real(), pb.s3(w1, w2).real());
    }
    const double n3 = num / den;
    num = den = 0.0;
    for (double w1 : w) {
        for (double w2 : w) acc(pa.s4(w1, w2), pb.s4(w1, w2));
    }
    return std::max({n2, n3, num / den});
}

// Highest interior local maximum of S2 at omega > 0 on a grid of the given spacing, in kHz;
// zero when S2 decreases monotonically (the peak sits at zero frequency).
double s2_peak_khz(const LiouvillianSpec& spec, double fmax, double step) {
    const QuantumPolyspectra p(spec);
    double best = -1.0, at = 0.0;
    double before = p.s2(0.0), here = p.s2(kTwoPi * step);
    for (double f = step; f < fmax; f += step) {
        const double after = p.s2(kTwoPi * (f + step));
        if (here > before && here >= after && here > best) {
            best = here;
            at = f;
        }
        before = here;
        here = after;
    }
    return at;
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("Fermi function limits and midpoint") {
    CHECK(fermi(0.0, 10.0) == doctest::Approx(0.5));
    CHECK(fermi(-1e5, 10.0) == 1.0);
    CHECK(fermi(1e5, 10.0) == 0.0);
    CHECK(std::isfinite(fermi(1e300, 0.01)));
    CHECK_THROWS_AS(fermi(0.0, 0.0), ConfigError);
}

TEST_CASE("spin3 rates at the charge degeneracy point") {
    Spin3Params p;
    p.Gamma = 2.0;
    p.epsilon = 0.0;
    p.Delta = 0.0;
    const Spin3Rates r = spin3_rates(p);
    CHECK(r.in_up == doctest::Approx(p.d_factor));
    CHECK(r.in_down == doctest::Approx(p.d_factor));
    CHECK(r.out_up == doctest::Approx(1.0));
    CHECK(r.out_down == doctest::Approx(1.0));
}

TEST_CASE("spin3 rates far below the chemical potential") {
    Spin3Params p;
    p.Gamma = 1.5;
    p.epsilon = -1e4;
    p.Delta = 0.3;
    const Spin3Rates r = spin3_rates(p);
    CHECK(r.in_up == doctest::Approx(p.d_factor * 1.5));
    CHECK(r.in_down == doctest::Approx(p.d_factor * 1.5));
    CHECK(r.out_up == 0.0);
    CHECK(r.out_down == 0.0);
}

TEST_CASE("spin3 in-rate ratio equals the Fermi ratio") {
    for (double eps : {-2.0, -0.7, 0.0, 0.4}) {
        for (double delta : {0.05, 0.28, 1.0}) {
            Spin3Params p;
            p.epsilon = eps;
            p.Delta = delta;
            const Spin3Rates r = spin3_rates(p);
            const double expect = fermi(eps + delta / 2, p.temperature) / fermi(eps - delta / 2, p.temperature);
            CHECK(r.in_up / r.in_down == doctest::Approx(expect).epsilon(1e-14));
        }
    }
}

TEST_CASE("reference spin3 rates are reachable for a 2 T Zeeman splitting") {
    const double target[4] = {1.18, 1.24, 0.29, 0.22};
    double best = 1e300;
    for (double g_factor = 1.5; g_factor <= 2.5001; g_factor += 0.1) {
        for (double gamma = 1.0; gamma <= 2.2; gamma += 0.02) {
            for (double eps = -3.0; eps <= 0.0; eps += 0.02) {
                Spin3Params p;
                p.Gamma = gamma;
                p.epsilon = eps;
                p.Delta = g_factor * kBohrMagnetonMeVPerT * 2.0;
                const Spin3Rates r = spin3_rates(p);
                const double got[4] = {r.in_up, r.in_down, r.out_up, r.out_down};
                double worst = 0.0;
                for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(got[k] / target[k] - 1.0));
                best = std::min(best, worst);
            }
        }
    }
    CHECK(best < 0.05);
}

TEST_CASE("spin3 default preset lands near the reference rates") {
    const ParamOverrides v = preset_parameters("spin3");
    Spin3Params p;
    p.Gamma = v.at("Gamma");
    p.epsilon = v.at("epsilon");
    p.Delta = v.at("Delta");
    const Spin3Rates r = spin3_rates(p);
    CHECK(r.in_up == doctest::Approx(1.18).epsilon(0.02));
    CHECK(r.in_down == doctest::Approx(1.24).epsilon(0.02));
    CHECK(r.out_up == doctest::Approx(0.29).epsilon(0.02));
    CHECK(r.out_down == doctest::Approx(0.22).epsilon(0.02));
}

TEST_CASE("generated specs are trace preserving with a spectral gap") {
    const std::vector<LiouvillianSpec> specs = {
        sqd_model({1.0, 0.5, 1.0}), spin3_model(Spin3Params{}),
        spin3_model_from_rates({0.5, 2.5, 0.5, 2.5}, 0.0, 1.0), doubledot_model({})};
    for (const auto& spec : specs) {
        const SuperOperator L = build_liouvillian(spec);
        const int d = L.hilbert_dim();
        CHECK((trace_functional(d) * L.matrix()).norm() < 1e-12);
        const Eigen::Index null = null_mode(L);
        for (Eigen::Index j = 0; j < L.size(); ++j) {
            if (j != null) CHECK(L.eigen().eigenvalues(j).real() < 0.0);
        }
    }
}

TEST_CASE("empty dot when nothing tunnels in") {
    const LiouvillianSpec spec = sqd_model({0.0, 0.7, 1.0});
    const StateVector rho = steady_state(build_liouvillian(spec));
    CHECK(std::abs(rho.matrix()(0, 0) - 1.0) < 1e-12);
    const QuantumPolyspectra p(spec);
    for (double w : {0.0, 1.0, 10.0}) CHECK(p.s2(w) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("equal dot rates give a vanishing bispectrum") {
    const QuantumPolyspectra p(sqd_model({2.0, 2.0, 1.0}));
    for (double w1 : {0.0, 1.3, -4.0}) {
        for (double w2 : {0.0, 2.1}) CHECK(std::abs(p.s3(w1, w2)) < 1e-14);
    }
}

TEST_CASE("asymmetric spin rates give a two-Lorentzian S2") {
    // A single Lorentzian a/(b^2 + w^2) makes 1/(S2 - floor) exactly linear in w^2.
    auto curvature = [](const LiouvillianSpec& spec) {
        const QuantumPolyspectra p(spec);
        std::vector<double> x, y;
        for (int i = 0; i <= 20; ++i) {
            const double w = 0.5 * i;
            x.push_back(w * w);
            y.push_back(1.0 / (p.s2(w) - spec.beta_sq / 4.0));
        }
        const double slope_low = (y[2] - y[0]) / (x[2] - x[0]);
        const double slope_high = (y[20] - y[18]) / (x[20] - x[18]);
        return std::abs(slope_high / slope_low - 1.0);
    };
    CHECK(curvature(sqd_model({1.0, 0.5, 1.0})) < 1e-10);
    CHECK(curvature(spin3_model_from_rates({0.5, 2.5, 0.5, 2.5}, 0.0, 1.0)) > 0.1);
}

TEST_CASE("fast spin relaxation reduces spin3 to the effective dot") {
    const Spin3Rates r{0.5, 2.5, 0.5, 2.5};
    const LiouvillianSpec sqd = sqd_model({r.in_up + r.in_down, r.out_down, 1.0});
    double previous = 1e300;
    for (double factor : {1.0, 10.0, 100.0, 1000.0}) {
        const double dist = spectral_distance(spin3_model_from_rates(r, factor * 2.5, 1.0), sqd);
        CHECK(dist < previous);
        previous = dist;
    }
    CHECK(previous < 1e-2);
}

TEST_CASE("equal tunneling rates make spectra blind to spin relaxation") {
    const Spin3Rates r{0.8, 0.8, 0.8, 0.8};
    const QuantumPolyspectra a(spin3_model_from_rates(r, 0.0, 1.0));
    for (double relax : {0.3, 5.0, 80.0}) {
        const QuantumPolyspectra b(spin3_model_from_rates(r, relax, 1.0));
        for (double w1 : {0.0, 0.9, -2.5}) {
            CHECK(std::abs(a.s2(w1) - b.s2(w1)) < 1e-8);
            for (double w2 : {0.0, 1.7}) {
                CHECK(std::abs(a.s3(w1, w2) - b.s3(w1, w2)) < 1e-8);
                CHECK(std::abs(a.s4(w1, w2) - b.s4(w1, w2)) < 1e-8);
            }
        }
    }
}

TEST_CASE("double dot S2 peaks at g/2pi for weak measurement") {
    DoubleDotParams p;
    p.beta_sq = 0.01;
    const double peak = s2_peak_khz(doubledot_model(p), 1.5, 0.005);
    CHECK(std::abs(peak - 0.5) <= 0.005);
}

TEST_CASE("decoupled dots have no finite-frequency peak") {
    DoubleDotParams p;
    p.g = 0.0;
    p.beta_sq = 0.01;
    const QuantumPolyspectra s(doubledot_model(p));
    double previous = s.s2(0.0);
    for (int i = 1; i <= 100; ++i) {
        const double v = s.s2(0.05 * i);
        CHECK(v <= previous + 1e-15);
        previous = v;
    }
}

TEST_CASE("Zeno effect pulls the double-dot peak toward zero") {
    double previous = 1e300;
    for (double beta_sq : {0.01, 3.0, 6.0, 12.0}) {
        DoubleDotParams p;
        p.beta_sq = beta_sq;
        const double peak = s2_peak_khz(doubledot_model(p), 1.5, 0.001);
        CHECK(peak < previous);
        previous = peak;
    }
    CHECK(previous < 0.1);
}

TEST_CASE("coherent hopping conserves the particle number") {
    const LiouvillianSpec spec = doubledot_model({});
    CMatrix n_total = CMatrix::Zero(4, 4);
    // basis index n1 + 2 n2
    for (int i = 0; i < 4; ++i) n_total(i, i) = (i & 1) + (i >> 1);
    const CMatrix& h = spec.hamiltonian.matrix;
    CHECK((h * n_total - n_total * h).norm() < 1e-15);
    CHECK(h.norm() > 0.0);
}

TEST_CASE("presets and overrides") {
    const LiouvillianSpec s = model_from_preset("sqd", {{"gamma_in", 2.0}});
    CHECK(s.channels[0].rate_khz == 2.0);
    CHECK(s.channels[1].rate_khz == 0.5);
    const LiouvillianSpec direct =
        model_from_preset("spin3", {{"gamma_0up", 0.5}, {"gamma_0down", 2.5}, {"gamma_up0", 0.5}, {"gamma_down0", 2.5}});
    CHECK(direct.channels[1].rate_khz == 2.5);
    CHECK(model_from_preset("doubledot").hilbert.dimension == 4);

    CHECK_THROWS_AS(model_from_preset("tripledot"), ConfigError);
    CHECK_THROWS_AS(model_from_preset("sqd", {{"gamma", 1.0}}), ConfigError);
    CHECK_THROWS_AS(model_from_preset("sqd", {{"gamma_in", -1.0}}), ConfigError);
    CHECK_THROWS_AS(model_from_preset("spin3", {{"gamma_0up", 1.0}}), ConfigError);
    CHECK_THROWS_AS(model_from_preset("spin3", {{"temperature", 0.0}}), ConfigError);
    CHECK_THROWS_AS(model_from_preset("spin3", {{"d_factor", 1.5}}), ConfigError);
}

}  // TEST_SUITE
