#pragma once

#include <memory>
#include <string>
#include <vector>

#include "polyspec/types.hpp"

// Superoperator algebra on column-stacked density matrices: vec(rho)[i + d*j] = rho(i, j).
namespace polyspec {

struct HilbertSpec {
    int dimension = 0;
    std::vector<std::string> labels;

    static HilbertSpec from_labels(std::vector<std::string> labels);
    void validate() const;
};

struct OperatorMatrix {
    CMatrix matrix;
    std::string label;
};

struct Channel {
    OperatorMatrix op;
    double rate_khz = 0.0;
};

// One open quantum system under continuous monitoring of `measurement`.
// Units: rates and beta_sq in kHz, the Hamiltonian in rad*kHz (hbar = 1).
struct LiouvillianSpec {
    HilbertSpec hilbert;
    OperatorMatrix hamiltonian;
    std::vector<Channel> channels;
    OperatorMatrix measurement;
    double beta_sq = 0.0;

    // Throws ConfigError on a non-Hermitian Hamiltonian, negative rates or shape mismatches.
    void validate() const;
};

struct EigenDecomposition {
    CVector eigenvalues;
    CMatrix right;  // columns r_j
    CMatrix left;   // rows l_j^dagger, left * right = 1
    double reconstruction_error = 0.0;
    // Number of nonzero eigenvalue pairs closer than 1e-10 (semisimplicity is assumed, not proven).
    int near_degenerate_pairs = 0;
};

class SuperOperator {
public:
    SuperOperator() = default;
    SuperOperator(CMatrix matrix, int hilbert_dim, bool decompose = false);

    const CMatrix& matrix() const { return matrix_; }
    int hilbert_dim() const { return d_; }
    Eigen::Index size() const { return matrix_.rows(); }

    bool has_eigendecomposition() const { return static_cast<bool>(eig_); }
    // Throws NumericalError when the matrix was not (or could not be) diagonalised.
    const EigenDecomposition& eigen() const;

    CVector apply(const CVector& x) const { return matrix_ * x; }

private:
    CMatrix matrix_;
    int d_ = 0;
    std::shared_ptr<const EigenDecomposition> eig_;
};

// Vectorised density matrix; the constructor enforces Hermiticity, unit trace and positivity.
class StateVector {
public:
    StateVector(CVector vec, int dimension);
    static StateVector from_matrix(const CMatrix& rho);

    const CVector& vec() const { return vec_; }
    int dimension() const { return d_; }
    CMatrix matrix() const;

private:
    CVector vec_;
    int d_ = 0;
};

CVector vectorize(const CMatrix& m);
CMatrix unvectorize(const CVector& v, int d);

// Row functional t with t . vec(x) = Tr x.
Eigen::RowVectorXcd trace_functional(int d);

// Superoperators of x -> A x and x -> x B.
CMatrix left_multiplication(const CMatrix& a);
CMatrix right_multiplication(const CMatrix& b);

// x -> c x c^dagger - (c^dagger c x + x c^dagger c)/2
CMatrix dissipator(const CMatrix& c);

// Generator of x -> i[x, H] + sum_k rate_k D[c_k](x) + beta^2 D[A](x).
// Channel rates enter without the factor 1/2, so a population hop c = |b><a| proceeds at `rate`.
SuperOperator build_liouvillian(const LiouvillianSpec& spec);

// Index of the unique eigenvalue with |lambda| <= 1e-8 max|lambda_j|; throws NumericalError otherwise.
Eigen::Index null_mode(const SuperOperator& L);

// Trace-one null vector; throws NumericalError on a degenerate or missing null space.
StateVector steady_state(const SuperOperator& L);

// Fourier transform of G'(tau) = Theta(tau) (e^{L tau} - P0) with kernel e^{+i omega tau}:
// sum over non-null modes r_j l_j^dagger * (-1) / (lambda_j + i omega).
SuperOperator resolvent_gprime(const SuperOperator& L, double omega);

// x -> (A x + x A^dagger)/2
SuperOperator meas_superop(const CMatrix& a);
// x -> (A x + x A^dagger)/2 - Tr[(A rho0 + rho0 A^dagger)/2] x
SuperOperator meas_superop_prime(const CMatrix& a, const StateVector& rho0);

// P0 = vec(rho0) (x) t, the projector onto the steady state.
CMatrix steady_projector(const StateVector& rho0);

// e^{L t} by scaling and squaring (independent of the eigendecomposition).
CMatrix propagator(const SuperOperator& L, double t);

}  // namespace polyspec
