#include "polyspec/liouville.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

namespace polyspec {

namespace {

constexpr double kHermitianTol = 1e-12;
constexpr double kStateTol = 1e-10;
constexpr double kPositivityTol = 1e-9;
constexpr double kNullRelTol = 1e-8;

void check_operator(const OperatorMatrix& op, int d, const char* what) {
    if (op.matrix.rows() != d || op.matrix.cols() != d) {
        std::ostringstream msg;
        msg << what << " '" << op.label << "' is " << op.matrix.rows() << "x" << op.matrix.cols()
            << ", expected " << d << "x" << d;
        throw ConfigError(msg.str());
    }
    if (!op.matrix.allFinite()) {
        throw ConfigError(std::string(what) + " '" + op.label + "' has non-finite entries");
    }
}

std::shared_ptr<const EigenDecomposition> decompose(const CMatrix& m) {
    Eigen::ComplexEigenSolver<CMatrix> solver(m, true);
    if (solver.info() != Eigen::Success) return nullptr;
    auto eig = std::make_shared<EigenDecomposition>();
    eig->eigenvalues = solver.eigenvalues();
    eig->right = solver.eigenvectors();
    Eigen::FullPivLU<CMatrix> lu(eig->right);
    if (!lu.isInvertible()) return nullptr;
    eig->left = lu.inverse();

    const CMatrix rebuilt = eig->right * eig->eigenvalues.asDiagonal() * eig->left;
    const double scale = std::max(m.norm(), 1e-300);
    eig->reconstruction_error = m.norm() > 0.0 ? (rebuilt - m).norm() / scale : rebuilt.norm();
    if (!(eig->reconstruction_error <= 1e-9)) return nullptr;

    const double max_abs = eig->eigenvalues.cwiseAbs().maxCoeff();
    const Eigen::Index n = eig->eigenvalues.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const cplx li = eig->eigenvalues(i);
            const cplx lj = eig->eigenvalues(j);
            const bool nonzero = std::abs(li) > kNullRelTol * max_abs && std::abs(lj) > kNullRelTol * max_abs;
            if (nonzero && std::abs(li - lj) < 1e-10) ++eig->near_degenerate_pairs;
        }
    }
    return eig;
}

Eigen::Index null_mode_index(const EigenDecomposition& eig) {
    const CVector& ev = eig.eigenvalues;
    const double max_abs = ev.cwiseAbs().maxCoeff();
    const double tol = kNullRelTol * max_abs;
    Eigen::Index best = 0;
    int count = 0;
    for (Eigen::Index j = 0; j < ev.size(); ++j) {
        if (std::abs(ev(j)) <= tol) ++count;
        if (std::abs(ev(j)) < std::abs(ev(best))) best = j;
    }
    if (count > 1) {
        std::ostringstream msg;
        msg << "degenerate null space: " << count << " eigenvalues with |lambda| <= " << tol
            << " (steady state not unique)";
        throw NumericalError(msg.str());
    }
    if (count == 0) {
        std::ostringstream msg;
        msg << "no eigenvalue near zero: smallest |lambda| = " << std::abs(ev(best));
        throw NumericalError(msg.str());
    }
    return best;
}

}  // namespace

Eigen::Index null_mode(const SuperOperator& L) { return null_mode_index(L.eigen()); }

HilbertSpec HilbertSpec::from_labels(std::vector<std::string> labels) {
    HilbertSpec h{static_cast<int>(labels.size()), std::move(labels)};
    h.validate();
    return h;
}

void HilbertSpec::validate() const {
    if (dimension < 2) throw ConfigError("Hilbert space dimension must be >= 2");
    if (static_cast<int>(labels.size()) != dimension) {
        throw ConfigError("number of basis labels does not match the dimension");
    }
    std::set<std::string> unique(labels.begin(), labels.end());
    if (unique.size() != labels.size()) throw ConfigError("basis labels must be unique");
}

void LiouvillianSpec::validate() const {
    hilbert.validate();
    const int d = hilbert.dimension;
    check_operator(hamiltonian, d, "Hamiltonian");
    check_operator(measurement, d, "measurement operator");
    const double herm = (hamiltonian.matrix - hamiltonian.matrix.adjoint()).cwiseAbs().maxCoeff();
    if (herm > kHermitianTol) {
        std::ostringstream msg;
        msg << "Hamiltonian is not Hermitian (max |H - H^dagger| = " << herm << ")";
        throw ConfigError(msg.str());
    }
    for (const auto& ch : channels) {
        check_operator(ch.op, d, "channel operator");
        if (!(ch.rate_khz >= 0.0) || !std::isfinite(ch.rate_khz)) {
            throw ConfigError("channel '" + ch.op.label + "' has a negative or non-finite rate");
        }
    }
    if (!(beta_sq >= 0.0) || !std::isfinite(beta_sq)) {
        throw ConfigError("beta_sq must be finite and >= 0");
    }
}

SuperOperator::SuperOperator(CMatrix matrix, int hilbert_dim, bool decompose_now)
    : matrix_(std::move(matrix)), d_(hilbert_dim) {
    if (matrix_.rows() != static_cast<Eigen::Index>(d_) * d_ || matrix_.cols() != matrix_.rows()) {
        throw ConfigError("superoperator shape does not match d^2 x d^2");
    }
    if (decompose_now) eig_ = decompose(matrix_);
}

const EigenDecomposition& SuperOperator::eigen() const {
    if (!eig_) throw NumericalError("superoperator has no eigendecomposition (not diagonalisable?)");
    return *eig_;
}

StateVector::StateVector(CVector vec, int dimension) : vec_(std::move(vec)), d_(dimension) {
    if (vec_.size() != static_cast<Eigen::Index>(d_) * d_) {
        throw ConfigError("state vector length does not match d^2");
    }
    const CMatrix rho = matrix();
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kStateTol) {
        throw NumericalError("density matrix is not Hermitian");
    }
    if (std::abs(rho.trace() - cplx(1.0, 0.0)) > kStateTol) {
        throw NumericalError("density matrix trace differs from 1");
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (rho + rho.adjoint()));
    if (es.eigenvalues().minCoeff() < -kPositivityTol) {
        throw NumericalError("density matrix has a negative eigenvalue");
    }
}

StateVector StateVector::from_matrix(const CMatrix& rho) {
    return StateVector(vectorize(rho), static_cast<int>(rho.rows()));
}

CMatrix StateVector::matrix() const { return unvectorize(vec_, d_); }

CVector vectorize(const CMatrix& m) {
    return Eigen::Map<const CVector>(m.data(), m.size());
}

CMatrix unvectorize(const CVector& v, int d) {
    return Eigen::Map<const CMatrix>(v.data(), d, d);
}

Eigen::RowVectorXcd trace_functional(int d) {
    Eigen::RowVectorXcd t = Eigen::RowVectorXcd::Zero(static_cast<Eigen::Index>(d) * d);
    for (int i = 0; i < d; ++i) t(i + d * i) = 1.0;
    return t;
}

CMatrix left_multiplication(const CMatrix& a) {
    const Eigen::Index d = a.rows();
    CMatrix out = CMatrix::Zero(d * d, d * d);
    for (Eigen::Index j = 0; j < d; ++j) out.block(j * d, j * d, d, d) = a;
    return out;
}

CMatrix right_multiplication(const CMatrix& b) {
    // vec(x b) = (b^T (x) 1) vec(x)
    const Eigen::Index d = b.rows();
    CMatrix out = CMatrix::Zero(d * d, d * d);
    for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < d; ++c)
            for (Eigen::Index k = 0; k < d; ++k) out(r * d + k, c * d + k) = b(c, r);
    return out;
}

CMatrix dissipator(const CMatrix& c) {
    const CMatrix cdc = c.adjoint() * c;
    return left_multiplication(c) * right_multiplication(c.adjoint())
        - 0.5 * (left_multiplication(cdc) + right_multiplication(cdc));
}

SuperOperator build_liouvillian(const LiouvillianSpec& spec) {
    spec.validate();
    const CMatrix& h = spec.hamiltonian.matrix;
    const cplx i(0.0, 1.0);
    CMatrix L = i * (right_multiplication(h) - left_multiplication(h));
    for (const auto& ch : spec.channels) {
        if (ch.rate_khz > 0.0) L += ch.rate_khz * dissipator(ch.op.matrix);
    }
    if (spec.beta_sq > 0.0) L += spec.beta_sq * dissipator(spec.measurement.matrix);
    return SuperOperator(std::move(L), spec.hilbert.dimension, true);
}

StateVector steady_state(const SuperOperator& L) {
    const int d = L.hilbert_dim();
    const Eigen::Index n = L.size();
    const Eigen::RowVectorXcd t = trace_functional(d);
    CVector rho;
    if (L.has_eigendecomposition()) {
        const auto& eig = L.eigen();
        const Eigen::Index k = null_mode_index(eig);
        rho = eig.right.col(k);
    } else {
        CMatrix system(n + 1, n);
        system.topRows(n) = L.matrix();
        system.bottomRows(1) = t;
        CVector rhs = CVector::Zero(n + 1);
        rhs(n) = 1.0;
        Eigen::ColPivHouseholderQR<CMatrix> qr(system);
        qr.setThreshold(1e-10);
        if (qr.rank() < n) {
            std::ostringstream msg;
            msg << "degenerate null space: multiplicity " << (n - qr.rank() + 1);
            throw NumericalError(msg.str());
        }
        rho = qr.solve(rhs);
    }
    const cplx tr = t * rho;
    if (std::abs(tr) < 1e-300) throw NumericalError("null vector has zero trace");
    rho /= tr;
    CMatrix m = unvectorize(rho, d);
    m = 0.5 * (m + m.adjoint()).eval();
    rho = vectorize(m);

    const double residual = (L.matrix() * rho).norm();
    if (residual > 1e-9 * std::max(1.0, L.matrix().norm())) {
        std::ostringstream msg;
        msg << "steady-state residual too large: " << residual;
        throw NumericalError(msg.str());
    }
    return StateVector(rho, d);
}

SuperOperator resolvent_gprime(const SuperOperator& L, double omega) {
    const auto& eig = L.eigen();
    const Eigen::Index null = null_mode_index(eig);
    const double scale = eig.eigenvalues.cwiseAbs().maxCoeff();
    CVector g(eig.eigenvalues.size());
    for (Eigen::Index j = 0; j < g.size(); ++j) {
        if (j == null) {
            g(j) = 0.0;
            continue;
        }
        const cplx lambda = eig.eigenvalues(j);
        if (lambda.real() > -1e-12 * scale) {
            std::ostringstream msg;
            msg << "eigenvalue " << lambda << " lies on (or right of) the imaginary axis";
            throw NumericalError(msg.str());
        }
        g(j) = -1.0 / (lambda + cplx(0.0, omega));
    }
    CMatrix r = eig.right * g.asDiagonal() * eig.left;
    return SuperOperator(std::move(r), L.hilbert_dim());
}

SuperOperator meas_superop(const CMatrix& a) {
    return SuperOperator(0.5 * (left_multiplication(a) + right_multiplication(a.adjoint())),
                         static_cast<int>(a.rows()));
}

SuperOperator meas_superop_prime(const CMatrix& a, const StateVector& rho0) {
    const CMatrix rho = rho0.matrix();
    if (std::abs(rho.trace() - cplx(1.0, 0.0)) > kStateTol) {
        throw ConfigError("steady state must have unit trace");
    }
    if (a.rows() != rho.rows()) throw ConfigError("measurement operator and state dimensions differ");
    const cplx expectation = (0.5 * (a * rho + rho * a.adjoint())).trace();
    CMatrix m = meas_superop(a).matrix();
    m -= expectation * CMatrix::Identity(m.rows(), m.cols());
    return SuperOperator(std::move(m), static_cast<int>(a.rows()));
}

CMatrix steady_projector(const StateVector& rho0) {
    return rho0.vec() * trace_functional(rho0.dimension());
}

CMatrix propagator(const SuperOperator& L, double t) {
    const CMatrix scaled = L.matrix() * t;
    return scaled.exp();
}

}  // namespace polyspec
