#include "polyspec/analytic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include "polyspec/parallel.hpp"

namespace polyspec {

namespace {

constexpr double kImagTol = 1e-9;

double checked_real(cplx value, double magnitude, const char* what) {
    if (std::abs(value.imag()) > kImagTol * magnitude + 1e-300) {
        std::ostringstream msg;
        msg << what << " has an imaginary part " << value.imag() << " (real part " << value.real()
            << "): implementation fault";
        throw NumericalError(msg.str());
    }
    return value.real();
}

void clamp_small(RMatrix& values) {
    const double peak = values.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (std::abs(values(i)) < 1e-14 * peak) values(i) = 0.0;
    }
}

}  // namespace

QuantumPolyspectra::QuantumPolyspectra(const LiouvillianSpec& spec)
    : spec_(spec),
      L_(build_liouvillian(spec)),
      rho0_(steady_state(L_)),
      a_prime_(meas_superop_prime(spec.measurement.matrix, rho0_)) {
    const auto& eig = L_.eigen();
    const Eigen::Index null = null_mode(L_);
    const double scale = eig.eigenvalues.cwiseAbs().maxCoeff();
    const Eigen::Index dim = eig.eigenvalues.size();

    std::vector<Eigen::Index> modes;
    for (Eigen::Index j = 0; j < dim; ++j) {
        if (j == null) continue;
        if (eig.eigenvalues(j).real() > -1e-12 * scale) {
            std::ostringstream msg;
            msg << "Liouvillian eigenvalue " << eig.eigenvalues(j) << " has no decay; spectra diverge";
            throw NumericalError(msg.str());
        }
        modes.push_back(j);
    }
    n_ = modes.size();

    const CMatrix& ap = a_prime_.matrix();
    const CMatrix ar = ap * eig.right;
    const Eigen::RowVectorXcd t_ar = trace_functional(L_.hilbert_dim()) * ar;
    const CMatrix l_ar = eig.left * ar;
    const CVector l_ap_rho = eig.left * (ap * rho0_.vec());

    lambda_.resize(n_);
    u_.resize(n_);
    v_.resize(n_);
    w_.resize(n_);
    m_.resize(n_ * n_);
    for (std::size_t a = 0; a < n_; ++a) {
        lambda_[a] = eig.eigenvalues(modes[a]);
        u_[a] = t_ar(modes[a]);
        v_[a] = l_ap_rho(modes[a]);
        w_[a] = u_[a] * v_[a];
        for (std::size_t b = 0; b < n_; ++b) m_[a * n_ + b] = l_ar(modes[a], modes[b]);
    }
}

void QuantumPolyspectra::fill_kernel(double omega, std::vector<cplx>& g) const {
    g.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) g[j] = -1.0 / (lambda_[j] + cplx(0.0, omega));
}

double QuantumPolyspectra::s2(double omega) const {
    cplx sum = 0.0;
    double magnitude = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
        const cplx term = w_[j] * (-1.0 / (lambda_[j] + cplx(0.0, omega)) - 1.0 / (lambda_[j] - cplx(0.0, omega)));
        sum += term;
        magnitude += std::abs(term);
    }
    const double b2 = spec_.beta_sq;
    return b2 * b2 * checked_real(sum, magnitude, "S2") + b2 / 4.0;
}

// Tr[A'G'(a)A'G'(b)A'rho0]
cplx QuantumPolyspectra::t3(double a, double b) const {
    std::vector<cplx> ga, gb;
    fill_kernel(a, ga);
    fill_kernel(b, gb);
    cplx sum = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
        cplx inner = 0.0;
        for (std::size_t k = 0; k < n_; ++k) inner += m_[j * n_ + k] * gb[k] * v_[k];
        sum += u_[j] * ga[j] * inner;
    }
    return sum;
}

cplx QuantumPolyspectra::s3(double omega1, double omega2) const {
    const std::array<double, 3> w{omega1, omega2, -omega1 - omega2};
    std::array<int, 3> p{0, 1, 2};
    cplx sum = 0.0;
    do {
        // Latest time carries w[p[2]].
        sum += t3(w[p[2]], w[p[2]] + w[p[1]]);
    } while (std::next_permutation(p.begin(), p.end()));
    const double b2 = spec_.beta_sq;
    return b2 * b2 * b2 * sum;
}

QuantumPolyspectra::S4Integrals QuantumPolyspectra::s4_integrals(double omega4, double nu, double sigma) const {
    std::vector<cplx> g4, gs;
    fill_kernel(omega4, g4);
    fill_kernel(sigma, gs);
    S4Integrals out{0.0, 0.0};
    for (std::size_t j = 0; j < n_; ++j) {
        const cplx wj4 = w_[j] * g4[j];
        cplx pair = 0.0, triple = 0.0;
        for (std::size_t k = 0; k < n_; ++k) {
            const cplx h = -1.0 / (lambda_[j] + lambda_[k] + cplx(0.0, nu));
            pair += w_[k] * gs[k] * h;
            triple += w_[k] * h;
        }
        out.pair += wj4 * pair;
        out.triple += wj4 * gs[j] * triple;
    }
    return out;
}

// One ordering (t4 latest) of the trispectrum with frequencies w1..w4 attached to t1..t4.
cplx QuantumPolyspectra::s4_ordered(double w2, double w3, double w4) const {
    const double nu = w3 + w4;
    const double sigma = w2 + w3 + w4;
    std::vector<cplx> ga, gb, gc;
    fill_kernel(w4, ga);
    fill_kernel(nu, gb);
    fill_kernel(sigma, gc);
    // Tr[A'G'(w4)A'G'(nu)A'G'(sigma)A'rho0]
    std::vector<cplx> right(n_);
    for (std::size_t k = 0; k < n_; ++k) {
        cplx acc = 0.0;
        for (std::size_t l = 0; l < n_; ++l) acc += m_[k * n_ + l] * gc[l] * v_[l];
        right[k] = gb[k] * acc;
    }
    cplx chain = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
        cplx acc = 0.0;
        for (std::size_t k = 0; k < n_; ++k) acc += m_[j * n_ + k] * right[k];
        chain += u_[j] * ga[j] * acc;
    }
    const S4Integrals integrals = s4_integrals(w4, nu, sigma);
    return chain - integrals.pair - integrals.triple;
}

double QuantumPolyspectra::s4(double omega1, double omega2) const {
    const std::array<double, 4> w{omega1, -omega1, omega2, -omega2};
    std::array<int, 4> p{0, 1, 2, 3};
    cplx sum = 0.0;
    double magnitude = 0.0;
    do {
        const cplx term = s4_ordered(w[p[1]], w[p[2]], w[p[3]]);
        sum += term;
        magnitude += std::abs(term);
    } while (std::next_permutation(p.begin(), p.end()));
    const double b2 = spec_.beta_sq;
    const double b8 = b2 * b2 * b2 * b2;
    return b8 * checked_real(sum, magnitude, "S4");
}

std::vector<double> symmetric_grid(double fmax_khz, int points) {
    if (points < 1 || points % 2 == 0) throw ConfigError("grid point count must be odd and positive");
    if (!(fmax_khz > 0.0) || !std::isfinite(fmax_khz)) throw ConfigError("fmax must be positive");
    std::vector<double> grid(points);
    const int half = points / 2;
    for (int i = 0; i < points; ++i) {
        grid[i] = half == 0 ? 0.0 : kTwoPi * fmax_khz * static_cast<double>(i - half) / half;
    }
    return grid;
}

SpectrumGrid s2_analytic(const QuantumPolyspectra& engine, std::span<const double> omega) {
    SpectrumGrid grid;
    grid.order = 2;
    grid.axis1.assign(omega.begin(), omega.end());
    grid.values.resize(static_cast<Eigen::Index>(omega.size()), 1);
    parallel_for(omega.size(), [&](std::size_t i) { grid.values(static_cast<Eigen::Index>(i), 0) = engine.s2(omega[i]); });
    clamp_small(grid.values);
    grid.validate();
    return grid;
}

SpectrumGrid s3_analytic(const QuantumPolyspectra& engine, std::span<const double> omega1,
                         std::span<const double> omega2) {
    SpectrumGrid grid;
    grid.order = 3;
    grid.axis1.assign(omega1.begin(), omega1.end());
    grid.axis2.assign(omega2.begin(), omega2.end());
    const auto n1 = static_cast<Eigen::Index>(omega1.size());
    const auto n2 = static_cast<Eigen::Index>(omega2.size());
    grid.values.resize(n1, n2);
    RMatrix imag(n1, n2);
    parallel_for(omega1.size(), [&](std::size_t i) {
        for (Eigen::Index j = 0; j < n2; ++j) {
            const cplx v = engine.s3(omega1[i], omega2[static_cast<std::size_t>(j)]);
            grid.values(static_cast<Eigen::Index>(i), j) = v.real();
            imag(static_cast<Eigen::Index>(i), j) = v.imag();
        }
    });
    clamp_small(grid.values);
    clamp_small(imag);
    grid.imag = std::move(imag);
    grid.validate();
    return grid;
}

SpectrumGrid s4_analytic(const QuantumPolyspectra& engine, std::span<const double> omega1,
                         std::span<const double> omega2) {
    SpectrumGrid grid;
    grid.order = 4;
    grid.axis1.assign(omega1.begin(), omega1.end());
    grid.axis2.assign(omega2.begin(), omega2.end());
    const auto n2 = static_cast<Eigen::Index>(omega2.size());
    grid.values.resize(static_cast<Eigen::Index>(omega1.size()), n2);
    parallel_for(omega1.size(), [&](std::size_t i) {
        for (Eigen::Index j = 0; j < n2; ++j) {
            grid.values(static_cast<Eigen::Index>(i), j) = engine.s4(omega1[i], omega2[static_cast<std::size_t>(j)]);
        }
    });
    clamp_small(grid.values);
    grid.validate();
    return grid;
}

SpectrumGrid s2_analytic(const LiouvillianSpec& spec, std::span<const double> omega) {
    return s2_analytic(QuantumPolyspectra(spec), omega);
}

SpectrumGrid s3_analytic(const LiouvillianSpec& spec, std::span<const double> omega1,
                         std::span<const double> omega2) {
    return s3_analytic(QuantumPolyspectra(spec), omega1, omega2);
}

SpectrumGrid s4_analytic(const LiouvillianSpec& spec, std::span<const double> omega1,
                         std::span<const double> omega2) {
    return s4_analytic(QuantumPolyspectra(spec), omega1, omega2);
}

double multi_time_moment(const LiouvillianSpec& spec, std::span<const double> times) {
    if (times.empty()) throw ConfigError("multi-time moment needs at least one time");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) throw ConfigError("moment times must be strictly ascending");
    }
    const SuperOperator L = build_liouvillian(spec);
    const StateVector rho0 = steady_state(L);
    const CMatrix a = meas_superop(spec.measurement.matrix).matrix();
    CVector x = a * rho0.vec();
    for (std::size_t i = 1; i < times.size(); ++i) {
        x = a * (propagator(L, times[i] - times[i - 1]) * x);
    }
    const cplx tr = trace_functional(L.hilbert_dim()) * x;
    return std::pow(spec.beta_sq, static_cast<double>(times.size())) * tr.real();
}

CumulantValue cumulant_time(const LiouvillianSpec& spec, int order, std::span<const double> taus) {
    if (order < 2 || order > 4) throw ConfigError("cumulant order must be 2, 3 or 4");
    if (static_cast<int>(taus.size()) != order - 1) {
        throw ConfigError("cumulant of order n needs n - 1 time differences");
    }
    for (double tau : taus) {
        if (!(tau >= 0.0) || !std::isfinite(tau)) throw ConfigError("time differences must be >= 0");
    }
    const SuperOperator L = build_liouvillian(spec);
    const StateVector rho0 = steady_state(L);
    const CMatrix ap = meas_superop_prime(spec.measurement.matrix, rho0).matrix();
    const CMatrix p0 = steady_projector(rho0);
    const Eigen::RowVectorXcd t = trace_functional(L.hilbert_dim());
    const CVector start = ap * rho0.vec();
    auto gprime = [&](double tau) -> CMatrix { return propagator(L, tau) - p0; };

    const double b2 = spec.beta_sq;
    CumulantValue out;
    out.order = order;
    out.taus.assign(taus.begin(), taus.end());
    cplx value = 0.0;
    if (order == 2) {
        value = b2 * b2 * (t * (ap * (gprime(taus[0]) * start)))(0);
        out.delta_weight = b2 / 4.0;
    } else if (order == 3) {
        const CVector x = ap * (gprime(taus[0]) * start);
        value = b2 * b2 * b2 * (t * (ap * (gprime(taus[1]) * x)))(0);
    } else {
        const CMatrix g1 = gprime(taus[0]);
        const CMatrix g2 = gprime(taus[1]);
        const CMatrix g3 = gprime(taus[2]);
        const cplx chain = (t * (ap * (g3 * (ap * (g2 * (ap * (g1 * start)))))))(0);
        const cplx pair = (t * (ap * (g3 * (g2 * start))))(0) * (t * (ap * (g2 * (g1 * start))))(0);
        const cplx triple = (t * (ap * (g3 * (g2 * (g1 * start)))))(0) * (t * (ap * (g2 * start)))(0);
        value = b2 * b2 * b2 * b2 * (chain - pair - triple);
    }
    out.value = value.real();
    return out;
}

}  // namespace polyspec
