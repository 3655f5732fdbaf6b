#pragma once

#include <span>
#include <vector>

#include "polyspec/liouville.hpp"
#include "polyspec/spectrum.hpp"

namespace polyspec {

struct CumulantValue {
    int order = 2;
    std::vector<double> taus;  // positive time differences t_{i+1} - t_i, ms
    double value = 0.0;
    // Weight of the delta(t2 - t1) white-noise term of C2 (beta^2/4); zero for orders 3, 4.
    double delta_weight = 0.0;
};

// Exact polyspectra of the detector output of one monitored system.
//
// Everything is evaluated in the eigenbasis of the Liouvillian: with L = sum_j lambda_j r_j l_j^dagger
// the modified resolvent is diagonal, G'(w) = sum_{j != 0} r_j l_j^dagger g_j(w) with
// g_j(w) = -1/(lambda_j + i w).  The two frequency integrals of the trispectrum are convolutions
// of such kernels and collapse to (1/2pi) int g_j(nu - w) g_k(w) dw = -1/(lambda_j + lambda_k + i nu).
class QuantumPolyspectra {
public:
    explicit QuantumPolyspectra(const LiouvillianSpec& spec);

    double s2(double omega) const;
    // Complex in general; real for time-reversible dynamics.
    cplx s3(double omega1, double omega2) const;
    // Cut S4(omega1, -omega1, omega2); real by construction.
    double s4(double omega1, double omega2) const;

    // Closed-form values of the two frequency integrals of one ordered term of S4 (without beta^8):
    // pair   = (1/2pi) int Tr[A'G'(w4)G'(nu - w)A'rho0] Tr[A'G'(w)G'(sigma)A'rho0] dw
    // triple = (1/2pi) int Tr[A'G'(w4)G'(sigma)G'(nu - w)A'rho0] Tr[A'G'(w)A'rho0] dw
    // with nu = w3 + w4 and sigma = w2 + w3 + w4.
    struct S4Integrals {
        cplx pair;
        cplx triple;
    };
    S4Integrals s4_integrals(double omega4, double nu, double sigma) const;

    const LiouvillianSpec& spec() const { return spec_; }
    const SuperOperator& liouvillian() const { return L_; }
    const StateVector& steady() const { return rho0_; }
    const SuperOperator& meas_prime() const { return a_prime_; }
    double beta_sq() const { return spec_.beta_sq; }

private:
    void fill_kernel(double omega, std::vector<cplx>& g) const;
    cplx t3(double a, double b) const;
    cplx s4_ordered(double w2, double w3, double w4) const;

    LiouvillianSpec spec_;
    SuperOperator L_;
    StateVector rho0_;
    SuperOperator a_prime_;
    std::size_t n_ = 0;              // non-null modes
    std::vector<cplx> lambda_;
    std::vector<cplx> u_;            // t A' r_j
    std::vector<cplx> v_;            // l_j^dagger A' rho0
    std::vector<cplx> w_;            // u_j v_j
    std::vector<cplx> m_;            // l_j^dagger A' r_k, row-major n x n
};

// Odd-length grid omega = 2 pi f with f spanning [-fmax_khz, fmax_khz] (omega = 0 on grid).
std::vector<double> symmetric_grid(double fmax_khz, int points);

SpectrumGrid s2_analytic(const LiouvillianSpec& spec, std::span<const double> omega);
SpectrumGrid s3_analytic(const LiouvillianSpec& spec, std::span<const double> omega1,
                         std::span<const double> omega2);
SpectrumGrid s4_analytic(const LiouvillianSpec& spec, std::span<const double> omega1,
                         std::span<const double> omega2);

// Same as above for an already constructed engine (avoids re-diagonalising inside fits).
SpectrumGrid s2_analytic(const QuantumPolyspectra& engine, std::span<const double> omega);
SpectrumGrid s3_analytic(const QuantumPolyspectra& engine, std::span<const double> omega1,
                         std::span<const double> omega2);
SpectrumGrid s4_analytic(const QuantumPolyspectra& engine, std::span<const double> omega1,
                         std::span<const double> omega2);

// <z(t_n) ... z(t_1)> = beta^{2n} Tr[A G(t_n - t_{n-1}) A ... G(t_2 - t_1) A rho0] for strictly
// ascending times, using matrix exponentials of L.
double multi_time_moment(const LiouvillianSpec& spec, std::span<const double> times);

// Time-ordered cumulant C_order for positive time differences taus (order - 1 of them). The
// delta contribution of C2 is excluded from `value` and reported in `delta_weight`.
CumulantValue cumulant_time(const LiouvillianSpec& spec, int order, std::span<const double> taus);

}  // namespace polyspec
