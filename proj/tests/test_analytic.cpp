#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "polyspec/analytic.hpp"
#include "polyspec/models.hpp"
#include "polyspec/sqd_closed_form.hpp"
#include "support.hpp"

using namespace polyspec;

namespace {

// Fourth cumulant of the telegraph process for ordered times with gaps (t1, t2, t3).
double telegraph_c4(const testing::Telegraph& tg, double t1, double t2, double t3) {
    auto c2 = [&](double tau) { return tg.central({tau}); };
    return tg.central({t1, t2, t3}) - c2(t1) * c2(t3) - c2(t1 + t2) * c2(t2 + t3) - c2(t1 + t2 + t3) * c2(t2);
}

// (1/2pi) int f(w) dw over the real line via w = c tan(theta), adaptive Gauss-Kronrod.
template <typename F>
cplx integrate_line(F&& f, double c) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto part = [&](bool imag) {
        return GK::integrate(
            [&](double th) {
                const double sec = 1.0 / std::cos(th);
                const cplx v = f(c * std::tan(th)) * (c * sec * sec);
                return imag ? v.imag() : v.real();
            },
            -kPi / 2, kPi / 2, 15, 1e-12);
    };
    return cplx(part(false), part(true)) / kTwoPi;
}

}  // namespace

TEST_SUITE("analytic") {

TEST_CASE("first moment is beta^2 times the occupation") {
    const double gin = 1.2, gout = 0.4, b2 = 0.7;
    const std::vector<double> t{0.3};
    CHECK(multi_time_moment(sqd_model({gin, gout, b2}), t) == doctest::Approx(b2 * gin / (gin + gout)).epsilon(1e-12));
}

TEST_CASE("moments factorize at widely separated times") {
    std::mt19937_64 rng(2);
    for (int k = 0; k < 5; ++k) {
        const LiouvillianSpec spec = testing::random_spec(rng, 3);
        const double mean = multi_time_moment(spec, std::vector<double>{0.0});
        const double far = multi_time_moment(spec, std::vector<double>{0.0, 200.0});
        CHECK(far == doctest::Approx(mean * mean).epsilon(1e-9));
    }
}

TEST_CASE("second moment equals C2 plus the squared mean") {
    const double gin = 1.0, gout = 0.5, b2 = 1.3;
    const testing::Telegraph tg(gin, gout);
    const LiouvillianSpec spec = sqd_model({gin, gout, b2});
    const double mean = b2 * tg.p(1);
    for (double tau : {0.05, 0.4, 2.0}) {
        const double m2 = multi_time_moment(spec, std::vector<double>{1.0, 1.0 + tau});
        CHECK(m2 == doctest::Approx(b2 * b2 * tg.central({tau}) + mean * mean).epsilon(1e-12));
    }
}

TEST_CASE("C2 of the dot is a single exponential") {
    const double gin = 1.0, gout = 0.5, b2 = 2.0;
    const LiouvillianSpec spec = sqd_model({gin, gout, b2});
    for (double tau : {0.0, 0.1, 1.0, 5.0}) {
        const std::vector<double> t{tau};
        const CumulantValue c = cumulant_time(spec, 2, t);
        const double expect = b2 * b2 * gin * gout * std::exp(-(gin + gout) * tau) / std::pow(gin + gout, 2);
        CHECK(c.value == doctest::Approx(expect).epsilon(1e-12));
        CHECK(c.delta_weight == doctest::Approx(b2 / 4));
        CHECK(sqd::c2(gin, gout, b2, tau) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("C3 and C4 agree with the classical telegraph process") {
    for (auto [gin, gout] : {std::pair{1.0, 0.5}, std::pair{0.5, 1.0}, std::pair{0.8, 2.1}}) {
        const double b2 = 0.9;
        const testing::Telegraph tg(gin, gout);
        const LiouvillianSpec spec = sqd_model({gin, gout, b2});
        for (auto [t1, t2] : {std::pair{0.1, 0.2}, std::pair{0.0, 1.0}, std::pair{0.7, 0.05}}) {
            const double expect = std::pow(b2, 3) * tg.central({t1, t2});
            const std::vector<double> t{t1, t2};
            CHECK(cumulant_time(spec, 3, t).value == doctest::Approx(expect).epsilon(1e-10));
            CHECK(sqd::c3(gin, gout, b2, t1, t2) == doctest::Approx(expect).epsilon(1e-10));
        }
        for (double t3 : {0.3, 1.1}) {
            const double expect = std::pow(b2, 4) * telegraph_c4(tg, 0.1, 0.2, t3);
            const std::vector<double> t{0.1, 0.2, t3};
            CHECK(cumulant_time(spec, 4, t).value == doctest::Approx(expect).epsilon(1e-10));
            CHECK(sqd::c4(gin, gout, b2, 0.1, 0.2, t3) == doctest::Approx(expect).epsilon(1e-10));
        }
    }
}

TEST_CASE("C4 at (0.1, 0.2, 0.3) ms from the closed-form fourth-order cumulant") {
    // Direct transcription, independent of the library.
    const double gi = 1.0, go = 0.5, g = gi + go;
    const double t1 = 0.1, t2 = 0.2, t3 = 0.3;
    const double expect = gi * go *
                          ((gi - go) * (gi - go) * std::exp(g * t2) - 2 * gi * go) *
                          std::exp(-g * (t1 + 2 * t2 + t3)) / std::pow(g, 4);
    const std::vector<double> t{t1, t2, t3};
    const double got = cumulant_time(sqd_model({gi, go, 1.0}), 4, t).value;
    const double oracle = telegraph_c4(testing::Telegraph(gi, go), t1, t2, t3);
    CHECK(got == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(got == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("equal rates give a vanishing C3") {
    const LiouvillianSpec spec = sqd_model({0.9, 0.9, 1.0});
    for (double t1 : {0.0, 0.5}) {
        const std::vector<double> t{t1, 0.3};
        CHECK(std::abs(cumulant_time(spec, 3, t).value) < 1e-15);
    }
}

TEST_CASE("S2 examples") {
    CHECK(QuantumPolyspectra(sqd_model({1.0, 1.0, 1.0})).s2(0.0) == doctest::Approx(0.5).epsilon(1e-13));
    const QuantumPolyspectra flat(sqd_model({0.0, 1.0, 1.0}));
    for (double w : {0.0, 3.0, -40.0}) CHECK(flat.s2(w) == doctest::Approx(0.25).epsilon(1e-13));
    // Lorentzian tail: w^2 (S2 - floor) -> 2 beta^4 gin gout / (gin + gout)
    const QuantumPolyspectra p(sqd_model({1.0, 0.5, 2.0}));
    const double w = 1e4;
    CHECK(w * w * (p.s2(w) - 0.5) == doctest::Approx(2.0 * 4.0 * 0.5 / 1.5).epsilon(1e-6));
}

TEST_CASE("S2 is even and above the white floor") {
    std::mt19937_64 rng(4);
    for (int k = 0; k < 5; ++k) {
        const LiouvillianSpec spec = testing::random_spec(rng, 3);
        const QuantumPolyspectra p(spec);
        for (double w : {0.0, 0.4, 3.0}) {
            CHECK(p.s2(w) == doctest::Approx(p.s2(-w)).epsilon(1e-12));
            CHECK(p.s2(w) >= spec.beta_sq / 4 - 1e-12);
        }
    }
}

TEST_CASE("S3 at the origin for gin = 0.5, gout = 1") {
    const double expect = 2 * 0.5 * 1 * 0.5 * (3 * 2.25) / (1.5 * std::pow(2.25, 3));
    CHECK(expect == doctest::Approx(0.19753).epsilon(1e-4));
    const cplx got = QuantumPolyspectra(sqd_model({0.5, 1.0, 1.0})).s3(0.0, 0.0);
    CHECK(got.real() == doctest::Approx(expect).epsilon(1e-12));
    CHECK(std::abs(got.imag()) < 1e-15);
}

TEST_CASE("S3 sign follows gout - gin") {
    const std::vector<double> w = symmetric_grid(5.0, 21);
    const SpectrumGrid pos = s3_analytic(sqd_model({0.5, 1.0, 1.0}), w, w);
    const SpectrumGrid neg = s3_analytic(sqd_model({1.0, 0.5, 1.0}), w, w);
    CHECK(pos.values.minCoeff() > 0.0);
    CHECK(neg.values.maxCoeff() < 0.0);
}

TEST_CASE("S3 permutation and reflection symmetries") {
    std::mt19937_64 rng(8);
    for (int k = 0; k < 4; ++k) {
        const QuantumPolyspectra p(testing::random_spec(rng, 3));
        for (auto [a, b] : {std::pair{0.3, 1.1}, std::pair{-2.0, 0.7}}) {
            const cplx s = p.s3(a, b);
            CHECK(std::abs(s - p.s3(b, a)) < 1e-10 * std::abs(s));
            CHECK(std::abs(s - p.s3(a, -a - b)) < 1e-10 * std::abs(s));
            CHECK(std::abs(s - std::conj(p.s3(-a, -b))) < 1e-10 * std::abs(s));
        }
    }
}

TEST_CASE("S4 symmetries of the cut") {
    std::mt19937_64 rng(9);
    for (int k = 0; k < 3; ++k) {
        const QuantumPolyspectra p(testing::random_spec(rng, 3));
        for (auto [a, b] : {std::pair{0.3, 1.1}, std::pair{-2.0, 0.7}}) {
            const double s = p.s4(a, b);
            CHECK(p.s4(b, a) == doctest::Approx(s).epsilon(1e-9));
            CHECK(p.s4(-a, b) == doctest::Approx(s).epsilon(1e-9));
            CHECK(p.s4(a, -b) == doctest::Approx(s).epsilon(1e-9));
        }
    }
}

TEST_CASE("S4 of the dot is symmetric under gin <-> gout") {
    const QuantumPolyspectra a(sqd_model({1.0, 0.5, 1.0})), b(sqd_model({0.5, 1.0, 1.0}));
    for (double w1 : {0.0, 0.8, -3.0}) {
        for (double w2 : {0.0, 2.0}) CHECK(a.s4(w1, w2) == doctest::Approx(b.s4(w1, w2)).epsilon(1e-12));
    }
}

TEST_CASE("general machinery matches the dot closed forms") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    for (int k = 0; k < 5; ++k) {
        const double gi = u(rng), go = u(rng), b2 = u(rng);
        const QuantumPolyspectra p(sqd_model({gi, go, b2}));
        for (double w1 : {0.0, 1.7, -9.0}) {
            CHECK(p.s2(w1) == doctest::Approx(sqd::s2(gi, go, b2, w1)).epsilon(1e-10));
            for (double w2 : {0.0, 4.4, -0.6}) {
                CHECK(p.s3(w1, w2).real() == doctest::Approx(sqd::s3(gi, go, b2, w1, w2)).epsilon(1e-10));
                CHECK(p.s4(w1, w2) == doctest::Approx(sqd::s4(gi, go, b2, w1, w2)).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("spectra scale with beta for H = 0 models") {
    const Spin3Rates r{1.18, 1.24, 0.29, 0.22};
    const double b2a = 0.5, b2b = 2.0, q = b2b / b2a;
    const QuantumPolyspectra a(spin3_model_from_rates(r, 0.4, b2a));
    const QuantumPolyspectra b(spin3_model_from_rates(r, 0.4, b2b));
    for (double w1 : {0.0, 1.5}) {
        CHECK(b.s2(w1) - b2b / 4 == doctest::Approx(std::pow(q, 2) * (a.s2(w1) - b2a / 4)).epsilon(1e-12));
        for (double w2 : {0.0, -2.2}) {
            CHECK(b.s3(w1, w2).real() == doctest::Approx(std::pow(q, 3) * a.s3(w1, w2).real()).epsilon(1e-12));
            CHECK(b.s4(w1, w2) == doctest::Approx(std::pow(q, 4) * a.s4(w1, w2)).epsilon(1e-12));
        }
    }
}

TEST_CASE("S4 frequency integrals match numerical quadrature") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    for (const LiouvillianSpec& spec :
         {sqd_model({1.0, 0.5, 1.0}), spin3_model_from_rates({0.5, 2.5, 0.5, 2.5}, 0.3, 1.0), doubledot_model({})}) {
        const QuantumPolyspectra p(spec);
        const SuperOperator& L = p.liouvillian();
        const CMatrix ap = p.meas_prime().matrix();
        const CVector rho = p.steady().vec();
        const auto t = trace_functional(L.hilbert_dim());
        auto tr2 = [&](double x, double y) {
            return (t * ap * resolvent_gprime(L, x).matrix() * resolvent_gprime(L, y).matrix() * ap * rho)(0);
        };
        auto tr3 = [&](double x, double y, double z) {
            return (t * ap * resolvent_gprime(L, x).matrix() * resolvent_gprime(L, y).matrix() *
                    resolvent_gprime(L, z).matrix() * ap * rho)(0);
        };
        auto tr1 = [&](double x) { return (t * ap * resolvent_gprime(L, x).matrix() * ap * rho)(0); };
        double scale = 0.0;
        for (Eigen::Index j = 0; j < L.size(); ++j) scale = std::max(scale, std::abs(L.eigen().eigenvalues(j)));
        for (int k = 0; k < 3; ++k) {
            const double w4 = u(rng), nu = u(rng), sigma = u(rng);
            const auto exact = p.s4_integrals(w4, nu, sigma);
            const cplx pair = integrate_line([&](double w) { return tr2(w4, nu - w) * tr2(w, sigma); }, scale);
            const cplx triple = integrate_line([&](double w) { return tr3(w4, sigma, nu - w) * tr1(w); }, scale);
            CHECK(std::abs(pair - exact.pair) <= 1e-7 * std::abs(exact.pair));
            CHECK(std::abs(triple - exact.triple) <= 1e-7 * std::abs(exact.triple));
        }
    }
}

TEST_CASE("grids and argument errors") {
    const std::vector<double> g = symmetric_grid(5.0, 21);
    REQUIRE(g.size() == 21);
    CHECK(g[10] == 0.0);
    CHECK(g.front() == doctest::Approx(-kTwoPi * 5.0));
    CHECK(g.back() == doctest::Approx(kTwoPi * 5.0));
    CHECK_THROWS_AS(symmetric_grid(5.0, 20), ConfigError);
    CHECK_THROWS_AS(symmetric_grid(-1.0, 21), ConfigError);

    const LiouvillianSpec spec = sqd_model({1.0, 0.5, 1.0});
    CHECK_THROWS_AS(multi_time_moment(spec, std::vector<double>{1.0, 0.5}), ConfigError);
    CHECK_THROWS_AS(multi_time_moment(spec, std::vector<double>{1.0, 1.0}), ConfigError);
    CHECK_THROWS_AS(cumulant_time(spec, 5, std::vector<double>{0.1, 0.1, 0.1, 0.1}), ConfigError);
    CHECK_THROWS_AS(cumulant_time(spec, 2, std::vector<double>{-0.1}), ConfigError);
    CHECK_THROWS_AS(cumulant_time(spec, 3, std::vector<double>{0.1}), ConfigError);
}

TEST_CASE("analytic grids carry shape and metadata") {
    const std::vector<double> w = symmetric_grid(2.0, 5);
    const LiouvillianSpec spec = sqd_model({1.0, 0.5, 1.0});
    const SpectrumGrid s2 = s2_analytic(spec, w);
    CHECK(s2.order == 2);
    CHECK(s2.values.rows() == 5);
    CHECK(s2.values.cols() == 1);
    CHECK(s2.axis2.empty());
    const SpectrumGrid s4 = s4_analytic(spec, w, w);
    CHECK(s4.order == 4);
    CHECK(s4.values.rows() == 5);
    CHECK(s4.values.cols() == 5);
    CHECK_NOTHROW(s4.validate());
}

}  // TEST_SUITE
