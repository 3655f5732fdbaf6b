#include <doctest.h>

#include <random>

#include "polyspec/liouville.hpp"
#include "polyspec/models.hpp"
#include "support.hpp"

using namespace polyspec;

namespace {

LiouvillianSpec reference_model(int which) {
    if (which == 0) return sqd_model({1.0, 0.5, 1.0});
    if (which == 1) return spin3_model_from_rates({1.18, 1.24, 0.29, 0.22}, 0.3, 1.0);
    return doubledot_model({});
}

// G'(omega) by quadrature of (e^{L tau} - P0) e^{i omega tau} over tau >= 0.
CMatrix gprime_quadrature(const SuperOperator& L, double omega) {
    const StateVector rho0 = steady_state(L);
    const CMatrix p0 = steady_projector(rho0);
    const auto& ev = L.eigen().eigenvalues;
    double gap = 1e300, top = 0.0;
    for (Eigen::Index j = 0; j < ev.size(); ++j) {
        if (std::abs(ev(j)) > 1e-8) gap = std::min(gap, -ev(j).real());
        top = std::max(top, std::abs(ev(j)));
    }
    const double h = 1.0 / std::max({top, std::abs(omega), 1.0});
    const double tmax = 40.0 / gap;
    const CMatrix full = testing::integrate_propagator(L.matrix(), h, tmax,
                                                       [&](double t) { return std::exp(cplx(0.0, omega * t)); });
    // Subtract the integral of P0 e^{i omega tau} over the same panels.
    const double steps = std::ceil(tmax / h);
    const double t_end = steps * h;
    const cplx p0_weight = omega == 0.0 ? cplx(t_end) : (std::exp(cplx(0.0, omega * t_end)) - 1.0) / cplx(0.0, omega);
    return full - p0_weight * p0;
}

}  // namespace

TEST_SUITE("liouville") {

TEST_CASE("SQD population block is the classical rate matrix") {
    const double gin = 1.3, gout = 0.4;
    const SuperOperator L = build_liouvillian(sqd_model({gin, gout, 0.7}));
    // populations rho00 -> index 0, rho11 -> index 3
    CHECK(std::abs(L.matrix()(0, 0) - cplx(-gin)) < 1e-14);
    CHECK(std::abs(L.matrix()(0, 3) - cplx(gout)) < 1e-14);
    CHECK(std::abs(L.matrix()(3, 0) - cplx(gin)) < 1e-14);
    CHECK(std::abs(L.matrix()(3, 3) - cplx(-gout)) < 1e-14);
}

TEST_CASE("no dynamics gives the zero superoperator") {
    const SuperOperator L = build_liouvillian(sqd_model({0.0, 0.0, 0.0}));
    CHECK(L.matrix().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("double dot Liouvillian is 16x16 and trace preserving") {
    const SuperOperator L = build_liouvillian(doubledot_model({}));
    REQUIRE(L.size() == 16);
    std::mt19937_64 rng(3);
    const auto t = trace_functional(4);
    for (int k = 0; k < 100; ++k) {
        const CVector x = vectorize(testing::random_matrix(rng, 4));
        CHECK(std::abs((t * L.matrix() * x)(0)) < 1e-10);
    }
}

TEST_CASE("trace preservation for random systems including the measurement term") {
    std::mt19937_64 rng(11);
    for (int d : {2, 3, 4}) {
        for (int k = 0; k < 10; ++k) {
            const SuperOperator L = build_liouvillian(testing::random_spec(rng, d));
            const CVector x = vectorize(testing::random_matrix(rng, d));
            CHECK(std::abs((trace_functional(d) * L.matrix() * x)(0)) < 1e-10 * std::max(1.0, x.norm()));
        }
    }
}

TEST_CASE("eigendecomposition reconstructs the model Liouvillians") {
    for (int m = 0; m < 3; ++m) {
        const SuperOperator L = build_liouvillian(reference_model(m));
        REQUIRE(L.has_eigendecomposition());
        CHECK(L.eigen().reconstruction_error < 1e-9);
    }
}

TEST_CASE("spectral gap: non-null eigenvalues decay") {
    for (int m = 0; m < 3; ++m) {
        const SuperOperator L = build_liouvillian(reference_model(m));
        const auto& ev = L.eigen().eigenvalues;
        const Eigen::Index null = null_mode(L);
        for (Eigen::Index j = 0; j < ev.size(); ++j) {
            if (j != null) CHECK(ev(j).real() < 0.0);
        }
    }
}

TEST_CASE("steady state of the symmetric dot is diag(1/2, 1/2)") {
    const StateVector rho = steady_state(build_liouvillian(sqd_model({0.8, 0.8, 1.0})));
    const CMatrix m = rho.matrix();
    CHECK(std::abs(m(0, 0) - 0.5) < 1e-12);
    CHECK(std::abs(m(1, 1) - 0.5) < 1e-12);
    CHECK(std::abs(m(0, 1)) < 1e-12);
}

TEST_CASE("steady occupation matches long-time propagation") {
    const SuperOperator L = build_liouvillian(sqd_model({1.0, 0.5, 1.0}));
    const StateVector rho = steady_state(L);
    CMatrix start = CMatrix::Zero(2, 2);
    start(0, 0) = 1.0;
    const CVector late = propagator(L, 60.0) * vectorize(start);
    CHECK(std::abs(rho.matrix()(1, 1).real() - late(3).real()) < 1e-10);
    CHECK(std::abs(late(3).real() - 2.0 / 3.0) < 1e-10);
    CHECK((L.matrix() * rho.vec()).norm() < 1e-9);
}

TEST_CASE("double dot steady occupations are near one half") {
    DoubleDotParams p;
    p.beta_sq = 0.01;
    const StateVector rho = steady_state(build_liouvillian(doubledot_model(p)));
    const CMatrix m = rho.matrix();
    const double n1 = (m(1, 1) + m(3, 3)).real();
    const double n2 = (m(2, 2) + m(3, 3)).real();
    CHECK(std::abs(n1 - 0.5) < 0.05);
    CHECK(std::abs(n2 - 0.5) < 0.05);
}

TEST_CASE("steady_state reports a degenerate null space") {
    // No channels and a diagonal measurement: every population is stationary.
    const SuperOperator L = build_liouvillian(sqd_model({0.0, 0.0, 1.0}));
    try {
        steady_state(L);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("degenerate null space") != std::string::npos);
    }
}

TEST_CASE("G'(0) of the dot matches quadrature and has decay constant 1/(gin+gout)") {
    const double gin = 1.0, gout = 0.5;
    const SuperOperator L = build_liouvillian(sqd_model({gin, gout, 1.0}));
    const CMatrix g = resolvent_gprime(L, 0.0).matrix();
    const CMatrix q = gprime_quadrature(L, 0.0);
    CHECK((g - q).norm() / g.norm() < 1e-6);
    CVector fluct = CVector::Zero(4);
    fluct(0) = 1.0;
    fluct(3) = -1.0;
    CHECK((g * fluct - fluct / (gin + gout)).norm() < 1e-12);
}

TEST_CASE("G' annihilates the steady state and has zero trace output") {
    std::mt19937_64 rng(5);
    for (int m = 0; m < 3; ++m) {
        const SuperOperator L = build_liouvillian(reference_model(m));
        const StateVector rho0 = steady_state(L);
        const int d = L.hilbert_dim();
        for (double w : {0.0, 0.7, -3.1}) {
            const CMatrix g = resolvent_gprime(L, w).matrix();
            CHECK((g * rho0.vec()).norm() < 1e-10);
            const CVector x = vectorize(testing::random_matrix(rng, d));
            CHECK(std::abs((trace_functional(d) * g * x)(0)) < 1e-10 * x.norm());
        }
    }
}

TEST_CASE("symmetric dot: the fluctuation mode has pole at -2 kHz") {
    const SuperOperator L = build_liouvillian(sqd_model({1.0, 1.0, 1.0}));
    CVector fluct = CVector::Zero(4);
    fluct(0) = 1.0;
    fluct(3) = -1.0;
    for (double w : {0.0, 0.5, 2.0, -4.0}) {
        const CVector out = resolvent_gprime(L, w).matrix() * fluct;
        CHECK((out - fluct / cplx(2.0, -w)).norm() < 1e-12);
    }
}

TEST_CASE("resolvent identity against time-domain quadrature on a 20-point grid") {
    for (int m = 0; m < 3; ++m) {
        const SuperOperator L = build_liouvillian(reference_model(m));
        for (int k = 0; k < 20; ++k) {
            const double w = -6.0 + 12.0 * k / 19.0;
            const CMatrix g = resolvent_gprime(L, w).matrix();
            const CMatrix q = gprime_quadrature(L, w);
            CHECK((g - q).norm() / g.norm() < 1e-6);
        }
    }
}

TEST_CASE("resolvent_gprime requires an eigendecomposition") {
    const SuperOperator bare(CMatrix::Identity(4, 4), 2, false);
    CHECK_THROWS_AS(resolvent_gprime(bare, 0.0), NumericalError);
}

TEST_CASE("A' vanishes for the identity measurement") {
    const StateVector rho0 = steady_state(build_liouvillian(sqd_model({1.0, 0.5, 1.0})));
    CHECK(meas_superop_prime(CMatrix::Identity(2, 2), rho0).matrix().cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("A' of the symmetric dot shifts the occupation by -1/2") {
    const LiouvillianSpec spec = sqd_model({1.0, 1.0, 1.0});
    const StateVector rho0 = steady_state(build_liouvillian(spec));
    const CMatrix ap = meas_superop_prime(spec.measurement.matrix, rho0).matrix();
    // A' |0><0| = (0 - 1/2)|0><0|, A' |1><1| = (1 - 1/2)|1><1|
    CHECK(std::abs(ap(0, 0) - cplx(-0.5)) < 1e-12);
    CHECK(std::abs(ap(3, 3) - cplx(0.5)) < 1e-12);
    CHECK(std::abs(ap(0, 3)) < 1e-15);
}

TEST_CASE("Tr[A' rho0] = 0 for random systems") {
    std::mt19937_64 rng(17);
    for (int k = 0; k < 50; ++k) {
        const int d = 2 + k % 3;
        const LiouvillianSpec spec = testing::random_spec(rng, d);
        const StateVector rho0 = steady_state(build_liouvillian(spec));
        const CMatrix ap = meas_superop_prime(spec.measurement.matrix, rho0).matrix();
        CHECK(std::abs((trace_functional(d) * ap * rho0.vec())(0)) < 1e-10);
    }
}

TEST_CASE("propagation keeps states Hermitian with unit trace") {
    for (int m = 0; m < 3; ++m) {
        const LiouvillianSpec spec = reference_model(m);
        const SuperOperator L = build_liouvillian(spec);
        double gmin = 1e300;
        for (const auto& ch : spec.channels) {
            if (ch.rate_khz > 0.0) gmin = std::min(gmin, ch.rate_khz);
        }
        const int d = L.hilbert_dim();
        CMatrix rho = CMatrix::Zero(d, d);
        rho(0, 0) = 0.6;
        rho(1, 1) = 0.4;
        rho(0, 1) = rho(1, 0) = 0.3;
        for (int s = 0; s <= 10; ++s) {
            const CMatrix r = unvectorize(propagator(L, s / gmin) * vectorize(rho), d);
            CHECK((r - r.adjoint()).cwiseAbs().maxCoeff() < 1e-8);
            CHECK(std::abs(r.trace() - cplx(1.0)) < 1e-8);
        }
    }
}

TEST_CASE("specification errors") {
    LiouvillianSpec spec = sqd_model({1.0, 0.5, 1.0});
    SUBCASE("non-Hermitian Hamiltonian") {
        spec.hamiltonian.matrix(0, 1) = 1.0;
        CHECK_THROWS_AS(build_liouvillian(spec), ConfigError);
    }
    SUBCASE("negative rate") {
        spec.channels[0].rate_khz = -0.1;
        CHECK_THROWS_AS(build_liouvillian(spec), ConfigError);
    }
    SUBCASE("negative beta") {
        spec.beta_sq = -1.0;
        CHECK_THROWS_AS(build_liouvillian(spec), ConfigError);
    }
    SUBCASE("duplicate labels") {
        CHECK_THROWS_AS(HilbertSpec::from_labels({"a", "a"}), ConfigError);
    }
    SUBCASE("dimension one") {
        CHECK_THROWS_AS(HilbertSpec::from_labels({"a"}), ConfigError);
    }
    SUBCASE("operator of the wrong size") {
        spec.measurement.matrix = CMatrix::Identity(3, 3);
        CHECK_THROWS_AS(build_liouvillian(spec), ConfigError);
    }
}

TEST_CASE("state vectors must be physical") {
    CMatrix rho = CMatrix::Identity(2, 2);
    CHECK_THROWS(StateVector::from_matrix(rho));  // trace 2
    rho(0, 0) = 1.5;
    rho(1, 1) = -0.5;
    CHECK_THROWS(StateVector::from_matrix(rho));  // negative eigenvalue
    rho = 0.5 * CMatrix::Identity(2, 2);
    CHECK_NOTHROW(StateVector::from_matrix(rho));
}

}  // TEST_SUITE
