#pragma once

// Closed-form spectra and cumulants of a single quantum dot (rates in kHz, omega in rad*kHz).
namespace polyspec::sqd {

double s2(double gamma_in, double gamma_out, double beta_sq, double omega);
double s3(double gamma_in, double gamma_out, double beta_sq, double omega1, double omega2);
// Cut S4(omega1, -omega1, omega2).
double s4(double gamma_in, double gamma_out, double beta_sq, double omega1, double omega2);

// Time-ordered cumulants for time differences tau >= 0 (delta term of C2 excluded).
double c2(double gamma_in, double gamma_out, double beta_sq, double tau);
double c3(double gamma_in, double gamma_out, double beta_sq, double tau1, double tau2);
double c4(double gamma_in, double gamma_out, double beta_sq, double tau1, double tau2, double tau3);

}  // namespace polyspec::sqd
