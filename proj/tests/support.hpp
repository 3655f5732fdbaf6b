#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "polyspec/liouville.hpp"
#include "polyspec/models.hpp"

namespace testing {

using namespace polyspec;

inline CMatrix random_matrix(std::mt19937_64& rng, int d) {
    std::normal_distribution<double> n(0.0, 1.0);
    CMatrix m(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) m(i, j) = cplx(n(rng), n(rng));
    }
    return m;
}

inline CMatrix random_hermitian(std::mt19937_64& rng, int d) {
    const CMatrix m = random_matrix(rng, d);
    return 0.5 * (m + m.adjoint());
}

// Generic open system: random H, two random jump operators, Hermitian measurement operator.
inline LiouvillianSpec random_spec(std::mt19937_64& rng, int d) {
    std::uniform_real_distribution<double> u(0.2, 2.0);
    std::vector<std::string> labels;
    for (int i = 0; i < d; ++i) labels.push_back("s" + std::to_string(i));
    LiouvillianSpec spec;
    spec.hilbert = HilbertSpec::from_labels(labels);
    spec.hamiltonian = {random_hermitian(rng, d), "H"};
    spec.channels.push_back({{random_matrix(rng, d), "c1"}, u(rng)});
    spec.channels.push_back({{random_matrix(rng, d), "c2"}, u(rng)});
    spec.measurement = {random_hermitian(rng, d), "A"};
    spec.beta_sq = u(rng);
    return spec;
}

// Integral of f(tau) e^{L tau} over [0, tmax] by Gauss-Legendre panels of width h, propagating
// the panel origin with e^{L h}; independent of any eigendecomposition.
template <typename Weight>
CMatrix integrate_propagator(const CMatrix& L, double h, double tmax, Weight&& weight) {
    using Rule = boost::math::quadrature::gauss<double, 30>;
    std::vector<double> x, w;
    for (std::size_t i = 0; i < Rule::abscissa().size(); ++i) {
        const double a = Rule::abscissa()[i];
        const double wt = Rule::weights()[i];
        x.push_back(0.5 * h * (1.0 + a));
        w.push_back(0.5 * h * wt);
        if (a != 0.0) {
            x.push_back(0.5 * h * (1.0 - a));
            w.push_back(0.5 * h * wt);
        }
    }
    std::vector<CMatrix> node_prop;
    for (double xi : x) node_prop.push_back((L * xi).exp());
    const CMatrix step = (L * h).exp();
    CMatrix origin = CMatrix::Identity(L.rows(), L.cols());
    CMatrix total = CMatrix::Zero(L.rows(), L.cols());
    for (double t0 = 0.0; t0 < tmax; t0 += h) {
        CMatrix panel = CMatrix::Zero(L.rows(), L.cols());
        for (std::size_t i = 0; i < x.size(); ++i) panel += (w[i] * weight(t0 + x[i])) * node_prop[i];
        total += panel * origin;
        origin = step * origin;
    }
    return total;
}

// Classical two-state telegraph process with rates gin (0 -> 1) and gout (1 -> 0), observable n.
struct Telegraph {
    Eigen::Matrix2d W;
    Eigen::Vector2d p;
    Eigen::Matrix2d D;  // diag(n - <n>)

    Telegraph(double gin, double gout) {
        W << -gin, gout, gin, -gout;
        p << gout / (gin + gout), gin / (gin + gout);
        D = Eigen::Vector2d(0.0 - p(1), 1.0 - p(1)).asDiagonal();
    }
    Eigen::Matrix2d prop(double t) const { return (W * t).exp(); }
    // <dn(t_k) ... dn(t_1)> for ordered times with the given gaps
    double central(const std::vector<double>& gaps) const {
        Eigen::Vector2d v = D * p;
        for (double g : gaps) v = D * (prop(g) * v);
        return v.sum();
    }
};

}  // namespace testing
