#include "polyspec/sqd_closed_form.hpp"

#include <cmath>

#include "polyspec/types.hpp"

namespace polyspec::sqd {

namespace {

void check_rates(double gamma_in, double gamma_out, double beta_sq) {
    if (!(gamma_in > 0.0) || !(gamma_out > 0.0)) throw ConfigError("SQD rates must be positive");
    if (!(beta_sq >= 0.0)) throw ConfigError("beta_sq must be non-negative");
}

double sq(double x) { return x * x; }

}  // namespace

double s2(double gamma_in, double gamma_out, double beta_sq, double omega) {
    check_rates(gamma_in, gamma_out, beta_sq);
    const double g = gamma_in + gamma_out;
    return sq(beta_sq) * 2.0 * gamma_in * gamma_out / (g * (g * g + omega * omega)) + beta_sq / 4.0;
}

double s3(double gamma_in, double gamma_out, double beta_sq, double omega1, double omega2) {
    check_rates(gamma_in, gamma_out, beta_sq);
    const double g = gamma_in + gamma_out;
    const double g2 = g * g;
    const double num = 2.0 * gamma_in * gamma_out * (gamma_out - gamma_in) *
                       (3.0 * g2 + sq(omega1) + sq(omega2) + omega1 * omega2);
    const double den = g * (g2 + sq(omega1)) * (g2 + sq(omega2)) * (g2 + sq(omega1 + omega2));
    return beta_sq * beta_sq * beta_sq * num / den;
}

double s4(double gamma_in, double gamma_out, double beta_sq, double omega1, double omega2) {
    check_rates(gamma_in, gamma_out, beta_sq);
    const double g = gamma_in + gamma_out;
    const double g2 = g * g;
    const double a = sq(omega1);
    const double b = sq(omega2);
    const double p = (g2 + a) * (g2 + b);
    const double q = 3.0 * g2 * (2.0 * g2 + a + b) + sq(a - b);
    const double minus = g2 + sq(omega1 - omega2);
    const double plus = g2 + sq(omega1 + omega2);
    const double num = sq(gamma_in) * p * q - 2.0 * gamma_in * gamma_out * p * q +
                       2.0 * gamma_in * gamma_out * minus * plus * (a * b - g2 * (3.0 * g2 + a + b)) +
                       sq(gamma_out) * p * q;
    const double den = g2 * g * sq(g2 + a) * minus * sq(g2 + b) * plus;
    return sq(sq(beta_sq)) * 4.0 * gamma_in * gamma_out * num / den;
}

double c2(double gamma_in, double gamma_out, double beta_sq, double tau) {
    check_rates(gamma_in, gamma_out, beta_sq);
    const double g = gamma_in + gamma_out;
    return sq(beta_sq) * gamma_in * gamma_out / (g * g) * std::exp(-g * tau);
}

double c3(double gamma_in, double gamma_out, double beta_sq, double tau1, double tau2) {
    check_rates(gamma_in, gamma_out, beta_sq);
    const double g = gamma_in + gamma_out;
    return beta_sq * beta_sq * beta_sq * gamma_in * gamma_out * (gamma_out - gamma_in) / (g * g * g) *
           std::exp(-g * (tau1 + tau2));
}

double c4(double gamma_in, double gamma_out, double beta_sq, double tau1, double tau2, double tau3) {
    check_rates(gamma_in, gamma_out, beta_sq);
    const double g = gamma_in + gamma_out;
    const double p = gamma_in / g;
    const double v = p * (1.0 - p);
    return sq(sq(beta_sq)) * v *
           (sq(1.0 - 2.0 * p) * std::exp(-g * (tau1 + tau2 + tau3)) -
            2.0 * v * std::exp(-g * (tau1 + 2.0 * tau2 + tau3)));
}

}  // namespace polyspec::sqd
