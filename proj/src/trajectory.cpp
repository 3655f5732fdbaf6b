#include "polyspec/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "polyspec/parallel.hpp"

namespace polyspec {

namespace {

// Stack storage for d <= 4, heap beyond.
using Small = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

double hamiltonian_scale(const CMatrix& h) {
    if (h.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double min_eigenvalue(const Small& rho) {
    if (rho.rows() == 2) {
        const double a = rho(0, 0).real();
        const double d = rho(1, 1).real();
        return 0.5 * (a + d) - std::sqrt(0.25 * (a - d) * (a - d) + std::norm(rho(1, 0)));
    }
    Eigen::SelfAdjointEigenSolver<Small> es(rho, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

void hash_bytes(std::uint64_t& h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
}

void hash_matrix(std::uint64_t& h, const CMatrix& m) {
    const std::int64_t dims[2] = {m.rows(), m.cols()};
    hash_bytes(h, dims, sizeof(dims));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            const double parts[2] = {m(i, j).real(), m(i, j).imag()};
            hash_bytes(h, parts, sizeof(parts));
        }
    }
}

struct Stepper {
    int d = 0;
    double dt = 0.0;
    double beta = 0.0;
    Small h, a, a_sq, drift, a_dag_a;
    std::vector<Small> jumps;        // c_k
    std::vector<Small> jumps_dag_c;  // c_k^dagger c_k
    std::vector<double> rates;
};

Stepper make_stepper(const LiouvillianSpec& spec, double dt) {
    Stepper s;
    s.d = spec.hilbert.dimension;
    s.dt = dt;
    s.beta = std::sqrt(spec.beta_sq);
    s.h = spec.hamiltonian.matrix;
    s.a = spec.measurement.matrix;
    s.a_sq = s.a * s.a;
    s.a_dag_a = s.a.adjoint() * s.a;
    Small gen = cplx(0.0, -1.0) * s.h - 0.5 * spec.beta_sq * s.a_dag_a;
    for (const auto& ch : spec.channels) {
        if (ch.rate_khz == 0.0) continue;
        Small c = ch.op.matrix;
        Small cdc = c.adjoint() * c;
        gen -= 0.5 * ch.rate_khz * cdc;
        s.jumps.push_back(c);
        s.jumps_dag_c.push_back(cdc);
        s.rates.push_back(ch.rate_khz);
    }
    s.drift = Small::Identity(s.d, s.d) + gen * dt;
    return s;
}

}  // namespace

void SimConfig::validate() const {
    spec.validate();
    if (!(dt >= 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be a positive number of ms");
    if (n_steps < 1) throw ConfigError("n_steps must be at least 1");
    if (output_stride < 1) throw ConfigError("output stride must be at least 1");
    if (initial) StateVector::from_matrix(*initial);
    const double step = dt > 0.0 ? dt : default_dt(spec);
    const SuperOperator L = build_liouvillian(spec);
    const double lmax = L.eigen().eigenvalues.cwiseAbs().maxCoeff();
    if (step * lmax >= 0.1) {
        std::ostringstream msg;
        msg << "stability guard violated: dt * max|lambda(L)| = " << step * lmax << " >= 0.1 (dt = " << step
            << " ms, max|lambda| = " << lmax << " kHz)";
        throw NumericalError(msg.str());
    }
}

void TimeTrace::validate() const {
    if (!(dt > 0.0)) throw ConfigError("trace dt must be positive");
    if (samples.empty()) throw ConfigError("trace has no samples");
    for (double x : samples) {
        if (!std::isfinite(x)) throw ConfigError("trace contains non-finite samples");
    }
    if (latent && latent->size() != samples.size()) throw ConfigError("latent record length differs from samples");
}

double default_dt(const LiouvillianSpec& spec) {
    double fastest = spec.beta_sq;
    for (const auto& ch : spec.channels) fastest = std::max(fastest, ch.rate_khz);
    fastest = std::max(fastest, hamiltonian_scale(spec.hamiltonian.matrix) / kTwoPi);
    if (!(fastest > 0.0)) throw ConfigError("model has no rates; cannot choose a default dt");
    // Coherent hopping can put max|lambda| above the rates; stay at half the stability guard.
    const double lmax = build_liouvillian(spec).eigen().eigenvalues.cwiseAbs().maxCoeff();
    return std::min(0.01 / fastest, 0.05 / lmax);
}

std::string spec_fingerprint(const LiouvillianSpec& spec) {
    std::uint64_t h = 1469598103934665603ULL;
    hash_matrix(h, spec.hamiltonian.matrix);
    for (const auto& ch : spec.channels) {
        hash_matrix(h, ch.op.matrix);
        hash_bytes(h, &ch.rate_khz, sizeof(double));
    }
    hash_matrix(h, spec.measurement.matrix);
    hash_bytes(h, &spec.beta_sq, sizeof(double));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

TimeTrace simulate(const SimConfig& cfg) {
    cfg.validate();
    const double dt = cfg.dt > 0.0 ? cfg.dt : default_dt(cfg.spec);
    const Stepper s = make_stepper(cfg.spec, dt);
    const int d = s.d;

    Small rho = cfg.initial ? Small(*cfg.initial) : Small(steady_state(build_liouvillian(cfg.spec)).matrix());

    const std::int64_t n_out = cfg.n_steps / cfg.output_stride;
    if (n_out < 1) throw ConfigError("n_steps is smaller than the output stride");
    TimeTrace trace;
    trace.dt = dt * cfg.output_stride;
    trace.seed = cfg.seed;
    trace.model_hash = spec_fingerprint(cfg.spec);
    trace.samples.resize(static_cast<std::size_t>(n_out));
    if (cfg.record_latent) trace.latent.emplace(static_cast<std::size_t>(n_out));

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(dt));
    const double beta = s.beta;
    const double inv_stride = 1.0 / cfg.output_stride;
    double min_eig = min_eigenvalue(rho);

    Small m(d, d), next(d, d), tmp(d, d);
    for (std::int64_t out = 0; out < n_out; ++out) {
        double z_acc = 0.0;
        double latent_acc = 0.0;
        for (int k = 0; k < cfg.output_stride; ++k) {
            const double expect_a = (s.a.cwiseProduct(rho.transpose())).sum().real();  // Re Tr[A rho]
            const double dw = normal(rng);
            const double dy = 2.0 * beta * expect_a * dt + dw;
            z_acc += beta * dy / (2.0 * dt);
            latent_acc += expect_a;

            if (cfg.integrator == Integrator::kraus) {
                m = s.drift + (beta * dy) * s.a + (0.5 * beta * beta * (dy * dy - dt)) * s.a_sq;
                tmp.noalias() = m * rho;
                next.noalias() = tmp * m.adjoint();
                for (std::size_t j = 0; j < s.jumps.size(); ++j) {
                    tmp.noalias() = s.jumps[j] * rho;
                    next.noalias() += (s.rates[j] * dt) * (tmp * s.jumps[j].adjoint());
                }
            } else {
                const cplx mi(0.0, 1.0);
                next = rho;
                next += (-mi * dt) * (s.h * rho - rho * s.h);
                for (std::size_t j = 0; j < s.jumps.size(); ++j) {
                    next += (s.rates[j] * dt) * (s.jumps[j] * rho * s.jumps[j].adjoint() -
                                                 0.5 * (s.jumps_dag_c[j] * rho + rho * s.jumps_dag_c[j]));
                }
                const double b2 = beta * beta;
                next += (b2 * dt) * (s.a * rho * s.a.adjoint() - 0.5 * (s.a_dag_a * rho + rho * s.a_dag_a));
                next += (beta * dw) * (s.a * rho + rho * s.a.adjoint() - (2.0 * expect_a) * rho);
            }

            const double tr = next.trace().real();
            if (!std::isfinite(tr)) {
                std::ostringstream msg;
                msg << "NaN in the density matrix at step " << out * cfg.output_stride + k << "; reduce dt";
                throw NumericalError(msg.str());
            }
            if (cfg.integrator == Integrator::euler_maruyama && std::abs(tr - 1.0) > 1e-3) {
                std::ostringstream msg;
                msg << "trace drift " << std::abs(tr - 1.0) << " > 1e-3 at step " << out * cfg.output_stride + k
                    << "; reduce dt";
                throw NumericalError(msg.str());
            }
            rho = 0.5 * (next + next.adjoint()) / tr;
            min_eig = std::min(min_eig, min_eigenvalue(rho));
        }
        trace.samples[static_cast<std::size_t>(out)] = z_acc * inv_stride;
        if (trace.latent) (*trace.latent)[static_cast<std::size_t>(out)] = latent_acc * inv_stride;
    }
    trace.min_eigenvalue = min_eig;
    return trace;
}

std::vector<TimeTrace> ensemble(const SimConfig& cfg, int n_traces) {
    if (n_traces < 1) throw ConfigError("ensemble needs at least one trace");
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32)};
    std::vector<std::uint32_t> words(2 * static_cast<std::size_t>(n_traces));
    seq.generate(words.begin(), words.end());
    std::vector<TimeTrace> out(static_cast<std::size_t>(n_traces));
    parallel_for(out.size(), [&](std::size_t i) {
        SimConfig c = cfg;
        c.seed = (static_cast<std::uint64_t>(words[2 * i]) << 32) | words[2 * i + 1];
        out[i] = simulate(c);
    });
    return out;
}

}  // namespace polyspec
