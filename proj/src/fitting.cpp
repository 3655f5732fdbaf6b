#include "polyspec/fitting.hpp"

#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/math/tools/minima.hpp>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "polyspec/analytic.hpp"
#include "polyspec/parallel.hpp"

namespace polyspec {

namespace {

constexpr double kPenalty = 1e30;

struct Point {
    double w1 = 0.0;
    double w2 = 0.0;
    double value = 0.0;
    double weight = 1.0;  // 1 / sigma
};

struct OrderData {
    int order = 2;
    std::vector<Point> points;
};

bool same_axes(const SpectrumGrid& g) {
    return g.axis1.size() == g.axis2.size() && std::equal(g.axis1.begin(), g.axis1.end(), g.axis2.begin());
}

std::vector<OrderData> select_points(const FitProblem& p) {
    std::vector<OrderData> out;
    for (const auto& grid : p.data) {
        OrderData od;
        od.order = grid.order;
        const double nyq = grid.sample_dt > 0.0 ? kPi / grid.sample_dt : std::numeric_limits<double>::infinity();
        const double cut = p.nyquist_fraction * nyq;
        const double max_abs = grid.values.cwiseAbs().maxCoeff();
        const bool use_errors = p.weighting == Weighting::jackknife && grid.errors.has_value();
        const bool dedupe = grid.order > 2 && same_axes(grid);
        for (Eigen::Index i = 0; i < grid.rows(); ++i) {
            for (Eigen::Index j = 0; j < grid.cols(); ++j) {
                if (dedupe && j < i) continue;
                const double w1 = grid.axis1[static_cast<std::size_t>(i)];
                const double w2 = grid.order == 2 ? 0.0 : grid.axis2[static_cast<std::size_t>(j)];
                if (p.exclude_dc && (std::abs(w1) < 1e-12 || (grid.order > 2 && std::abs(w2) < 1e-12))) continue;
                double top = std::max(std::abs(w1), std::abs(w2));
                if (grid.order == 3) top = std::max(top, std::abs(w1 + w2));
                if (top > cut) continue;
                double sigma = max_abs > 0.0 ? max_abs : 1.0;
                if (use_errors && (*grid.errors)(i, j) > 0.0) sigma = (*grid.errors)(i, j);
                od.points.push_back({w1, w2, grid.values(i, j), 1.0 / sigma});
            }
        }
        if (od.points.empty()) throw ConfigError("no usable fit points in the order-" + std::to_string(grid.order) + " spectrum");
        out.push_back(std::move(od));
    }
    return out;
}

double to_unbounded(double x, double lo, double hi) {
    const double t = std::clamp((x - lo) / (hi - lo), 1e-12, 1.0 - 1e-12);
    return std::log(t / (1.0 - t));
}

double to_bounded(double u, double lo, double hi) {
    return lo + (hi - lo) / (1.0 + std::exp(-u));
}

// Holds the data and evaluates model spectra for physical parameter values.
class Objective {
public:
    explicit Objective(const FitProblem& p) : p_(p), data_(select_points(p)) {
        for (const auto& od : data_) n_points_ += od.points.size();
        double s2max = 0.0;
        for (const auto& od : data_) {
            if (od.order != 2) continue;
            for (const auto& pt : od.points) s2max = std::max(s2max, std::abs(pt.value));
        }
        bg_bound_ = 10.0 * std::max(s2max, 1e-12);
        for (const auto& f : p.free) {
            lo_.push_back(f.lower);
            hi_.push_back(f.upper);
        }
        if (p.fit_scale) {
            lo_.push_back(p.scale_lower);
            hi_.push_back(p.scale_upper);
        }
        if (p.fit_background) {
            lo_.push_back(-bg_bound_);
            hi_.push_back(bg_bound_);
        }
    }

    std::size_t n_phys() const { return p_.free.size(); }
    std::size_t n_all() const { return lo_.size(); }
    std::size_t n_points() const { return n_points_; }
    const std::vector<OrderData>& data() const { return data_; }
    double lo(std::size_t i) const { return lo_[i]; }
    double hi(std::size_t i) const { return hi_[i]; }

    ParamOverrides overrides(const RVector& phys) const {
        ParamOverrides o = p_.fixed;
        for (std::size_t i = 0; i < p_.free.size(); ++i) o[p_.free[i].name] = phys(static_cast<Eigen::Index>(i));
        return o;
    }

    // Model spectra at the data points (without nuisances); empty on numerical failure.
    std::vector<RVector> model(const RVector& phys) const {
        ++evaluations_;
        std::vector<RVector> out;
        try {
            const QuantumPolyspectra q(model_from_preset(p_.model, overrides(phys)));
            for (const auto& od : data_) {
                RVector m(static_cast<Eigen::Index>(od.points.size()));
                for (std::size_t k = 0; k < od.points.size(); ++k) {
                    const Point& pt = od.points[k];
                    double v = 0.0;
                    if (od.order == 2) v = q.s2(pt.w1);
                    else if (od.order == 3) v = q.s3(pt.w1, pt.w2).real();
                    else v = q.s4(pt.w1, pt.w2);
                    m(static_cast<Eigen::Index>(k)) = v;
                }
                out.push_back(std::move(m));
            }
        } catch (const NumericalError&) {
            out.clear();
        } catch (const ConfigError&) {
            out.clear();
        }
        return out;
    }

    // Splits a full parameter vector into (phys, scale, background).
    void unpack(const RVector& theta, RVector& phys, double& scale, double& bg) const {
        phys = theta.head(static_cast<Eigen::Index>(n_phys()));
        Eigen::Index k = static_cast<Eigen::Index>(n_phys());
        scale = p_.fit_scale ? theta(k++) : p_.scale;
        bg = p_.fit_background ? theta(k) : p_.background;
    }

    void residuals(const std::vector<RVector>& m, double scale, double bg, RVector& r) const {
        r.resize(static_cast<Eigen::Index>(n_points_));
        Eigen::Index k = 0;
        for (std::size_t g = 0; g < data_.size(); ++g) {
            const auto& od = data_[g];
            const double c = std::pow(scale, od.order);
            const double b = od.order == 2 ? bg : 0.0;
            for (std::size_t i = 0; i < od.points.size(); ++i) {
                const Point& pt = od.points[i];
                r(k++) = (c * m[g](static_cast<Eigen::Index>(i)) + b - pt.value) * pt.weight;
            }
        }
    }

    double chi2(const std::vector<RVector>& m, double scale, double bg) const {
        if (m.empty()) return kPenalty;
        RVector r;
        residuals(m, scale, bg, r);
        const double v = r.squaredNorm();
        return std::isfinite(v) ? v : kPenalty;
    }

    double chi2_theta(const RVector& theta) const {
        RVector phys;
        double scale, bg;
        unpack(theta, phys, scale, bg);
        return chi2(model(phys), scale, bg);
    }

    // Best background for a given scale (linear least squares on the order-2 points).
    double best_background(const std::vector<RVector>& m, double scale) const {
        if (!p_.fit_background) return p_.background;
        double num = 0.0, den = 0.0;
        for (std::size_t g = 0; g < data_.size(); ++g) {
            if (data_[g].order != 2) continue;
            for (std::size_t i = 0; i < data_[g].points.size(); ++i) {
                const Point& pt = data_[g].points[i];
                const double w2 = pt.weight * pt.weight;
                num += w2 * (pt.value - scale * scale * m[g](static_cast<Eigen::Index>(i)));
                den += w2;
            }
        }
        return den > 0.0 ? std::clamp(num / den, -bg_bound_, bg_bound_) : 0.0;
    }

    // Profiles scale and background out of the objective for fixed model spectra.
    double profile(const std::vector<RVector>& m, double& scale, double& bg) const {
        if (m.empty()) {
            scale = p_.scale;
            bg = p_.background;
            return kPenalty;
        }
        auto at = [&](double c) {
            const double b = best_background(m, c);
            return chi2(m, c, b);
        };
        if (!p_.fit_scale) {
            scale = p_.scale;
            bg = best_background(m, scale);
            return chi2(m, scale, bg);
        }
        const double lo = p_.scale_lower, hi = p_.scale_upper;
        const bool logscale = lo > 0.0 || hi < 0.0;
        auto from = [&](double s) {
            if (!logscale) return s;
            return lo > 0.0 ? std::exp(s) : -std::exp(s);
        };
        double s_lo = logscale ? std::log(std::abs(lo)) : lo;
        double s_hi = logscale ? std::log(std::abs(hi)) : hi;
        if (s_lo > s_hi) std::swap(s_lo, s_hi);
        constexpr int kScan = 40;
        double best_s = s_lo, best = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= kScan; ++i) {
            const double s = s_lo + (s_hi - s_lo) * i / kScan;
            const double v = at(from(s));
            if (v < best) {
                best = v;
                best_s = s;
            }
        }
        const double step = (s_hi - s_lo) / kScan;
        const auto r = boost::math::tools::brent_find_minima([&](double s) { return at(from(s)); },
                                                             std::max(s_lo, best_s - step), std::min(s_hi, best_s + step),
                                                             std::numeric_limits<double>::digits / 2);
        if (r.second < best) {
            best = r.second;
            best_s = r.first;
        }
        scale = from(best_s);
        bg = best_background(m, scale);
        return chi2(m, scale, bg);
    }

    int evaluations() const { return evaluations_; }

private:
    const FitProblem& p_;
    std::vector<OrderData> data_;
    std::size_t n_points_ = 0;
    double bg_bound_ = 1.0;
    std::vector<double> lo_, hi_;
    mutable std::atomic<int> evaluations_{0};
};

struct Candidate {
    RVector theta;
    double value = kPenalty;
};

RVector theta_from_u(const Objective& obj, const double* u) {
    RVector t(static_cast<Eigen::Index>(obj.n_all()));
    for (std::size_t i = 0; i < obj.n_all(); ++i) t(static_cast<Eigen::Index>(i)) = to_bounded(u[i], obj.lo(i), obj.hi(i));
    return t;
}

RVector u_from_theta(const Objective& obj, const RVector& theta) {
    RVector u(theta.size());
    for (std::size_t i = 0; i < obj.n_all(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        u(k) = to_unbounded(theta(k), obj.lo(i), obj.hi(i));
    }
    return u;
}

std::vector<Candidate> grid_search(const Objective& obj, const FitProblem& p) {
    const std::size_t np = obj.n_phys();
    int per = p.grid_points;
    if (per <= 0) per = std::clamp(static_cast<int>(std::floor(std::pow(400.0, 1.0 / std::max<std::size_t>(np, 1)))), 3, 9);
    std::size_t total = 1;
    for (std::size_t i = 0; i < np; ++i) total *= static_cast<std::size_t>(per);
    std::vector<Candidate> out(total);
    parallel_for(total, [&](std::size_t idx) {
        RVector phys(static_cast<Eigen::Index>(np));
        std::size_t rem = idx;
        for (std::size_t i = 0; i < np; ++i) {
            const int k = static_cast<int>(rem % static_cast<std::size_t>(per));
            rem /= static_cast<std::size_t>(per);
            const double lo = p.free[i].lower, hi = p.free[i].upper;
            const double t = (k + 0.5) / per;
            phys(static_cast<Eigen::Index>(i)) = lo > 0.0 ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t;
        }
        double scale, bg;
        const double v = obj.profile(obj.model(phys), scale, bg);
        RVector theta(static_cast<Eigen::Index>(obj.n_all()));
        theta.head(static_cast<Eigen::Index>(np)) = phys;
        Eigen::Index k = static_cast<Eigen::Index>(np);
        if (p.fit_scale) theta(k++) = scale;
        if (p.fit_background) theta(k) = bg;
        out[idx] = {theta, v};
    });
    std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
    return out;
}

struct NmContext {
    const Objective* obj;
};

double nm_function(const gsl_vector* u, void* params) {
    const auto* ctx = static_cast<const NmContext*>(params);
    return ctx->obj->chi2_theta(theta_from_u(*ctx->obj, u->data));
}

// Nelder-Mead in the unbounded coordinates; returns the best point and whether the simplex converged.
Candidate nelder_mead(const Objective& obj, const RVector& start, int budget, bool& converged) {
    const std::size_t n = obj.n_all();
    NmContext ctx{&obj};
    gsl_multimin_function f{&nm_function, n, &ctx};
    gsl_vector* x = gsl_vector_alloc(n);
    gsl_vector* step = gsl_vector_alloc(n);
    const RVector u0 = u_from_theta(obj, start);
    for (std::size_t i = 0; i < n; ++i) {
        gsl_vector_set(x, i, u0(static_cast<Eigen::Index>(i)));
        gsl_vector_set(step, i, 0.5);
    }
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
    gsl_multimin_fminimizer_set(s, &f, x, step);
    converged = false;
    const int first = obj.evaluations();
    while (obj.evaluations() - first < budget) {
        if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-9) == GSL_SUCCESS) {
            converged = true;
            break;
        }
    }
    Candidate best{theta_from_u(obj, s->x->data), s->fval};
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(step);
    gsl_vector_free(x);
    return best;
}

struct LmFunctor {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    const Objective* obj;
    int inputs() const { return static_cast<int>(obj->n_all()); }
    int values() const { return static_cast<int>(std::max(obj->n_points(), obj->n_all())); }

    int operator()(const Eigen::VectorXd& u, Eigen::VectorXd& fvec) const {
        const RVector theta = theta_from_u(*obj, u.data());
        RVector phys;
        double scale, bg;
        obj->unpack(theta, phys, scale, bg);
        const auto m = obj->model(phys);
        fvec.setZero(values());
        if (m.empty()) {
            fvec.setConstant(std::sqrt(kPenalty / values()));
            return 0;
        }
        RVector r;
        obj->residuals(m, scale, bg, r);
        fvec.head(r.size()) = r;
        return 0;
    }
};

std::vector<std::string> labels(const FitProblem& p) {
    std::vector<std::string> out;
    for (const auto& f : p.free) out.push_back(f.name);
    if (p.fit_scale) out.push_back("scale");
    if (p.fit_background) out.push_back("background");
    return out;
}

void fill_covariance(const Objective& obj, const FitProblem& p, const RVector& theta, FitResult& res) {
    const auto n = static_cast<Eigen::Index>(obj.n_all());
    const auto m = static_cast<Eigen::Index>(obj.n_points());
    RMatrix jac(m, n);
    auto resid = [&](const RVector& t, RVector& r) {
        RVector phys;
        double scale, bg;
        obj.unpack(t, phys, scale, bg);
        const auto mod = obj.model(phys);
        if (mod.empty()) return false;
        obj.residuals(mod, scale, bg, r);
        return true;
    };
    for (Eigen::Index j = 0; j < n; ++j) {
        const double range = obj.hi(static_cast<std::size_t>(j)) - obj.lo(static_cast<std::size_t>(j));
        const double h = std::max(1e-6 * std::abs(theta(j)), 1e-9 * range);
        RVector tp = theta, tm = theta, rp, rm;
        tp(j) += h;
        tm(j) -= h;
        if (!resid(tp, rp) || !resid(tm, rm)) {
            res.covariance_singular = true;
            res.message += "; covariance unavailable (model failed near optimum)";
            return;
        }
        jac.col(j) = (rp - rm) / (2.0 * h);
    }
    RVector colnorm = jac.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < n; ++j) {
        if (colnorm(j) == 0.0) colnorm(j) = 1.0;
    }
    const RMatrix js = jac * colnorm.cwiseInverse().asDiagonal();
    Eigen::SelfAdjointEigenSolver<RMatrix> es(js.transpose() * js);
    const RVector ev = es.eigenvalues();
    const double top = ev.maxCoeff();
    const double bottom = std::max(ev.minCoeff(), 0.0);
    res.condition_number = bottom > 0.0 ? top / bottom : std::numeric_limits<double>::infinity();
    res.covariance_singular = !(res.condition_number < 1e12);
    RMatrix inv_scaled = RMatrix::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        if (ev(k) > 1e-12 * top) inv_scaled += es.eigenvectors().col(k) * es.eigenvectors().col(k).transpose() / ev(k);
    }
    RMatrix cov = colnorm.cwiseInverse().asDiagonal() * inv_scaled * colnorm.cwiseInverse().asDiagonal();
    if (p.weighting == Weighting::max_normalized && m > n) cov *= res.objective / static_cast<double>(m - n);
    res.covariance = cov;
    res.covariance_labels = labels(p);
    for (Eigen::Index k = 0; k < n; ++k) {
        res.uncertainties[res.covariance_labels[static_cast<std::size_t>(k)]] = std::sqrt(std::max(cov(k, k), 0.0));
    }
    if (res.covariance_singular) {
        const RVector dir = es.eigenvectors().col(0);
        for (Eigen::Index k = 0; k < n; ++k) res.degenerate_direction[res.covariance_labels[static_cast<std::size_t>(k)]] = dir(k);
    }
}

}  // namespace

void FitProblem::validate() const {
    ParamOverrides all = fixed;
    std::set<std::string> names;
    for (const auto& f : free) {
        if (!names.insert(f.name).second) throw ConfigError("free parameter '" + f.name + "' listed twice");
        if (fixed.count(f.name)) throw ConfigError("parameter '" + f.name + "' is both free and fixed");
        all[f.name] = 0.5 * (f.lower + f.upper);
        if (!std::isfinite(f.lower) || !std::isfinite(f.upper) || !(f.lower < f.upper)) {
            throw ConfigError("bounds of '" + f.name + "' must be finite with lower < upper");
        }
        if (f.initial && !(*f.initial >= f.lower && *f.initial <= f.upper)) {
            throw ConfigError("initial value of '" + f.name + "' lies outside its bounds");
        }
    }
    if (free.empty()) throw ConfigError("no free parameters");
    preset_parameters(model, all);
    bool has2 = false, has3 = false;
    for (const auto& g : data) {
        g.validate();
        has2 = has2 || g.order == 2;
        has3 = has3 || g.order == 3;
    }
    if (!has2 || !has3) throw ConfigError("fit needs at least the order-2 and order-3 spectra");
    if (fit_scale && (!std::isfinite(scale_lower) || !std::isfinite(scale_upper) || !(scale_lower < scale_upper))) {
        throw ConfigError("scale bounds must be finite with lower < upper");
    }
    if (!fit_scale && !std::isfinite(scale)) throw ConfigError("fixed scale must be finite");
    if (!(nyquist_fraction > 0.0 && nyquist_fraction <= 1.0)) throw ConfigError("nyquist_fraction must lie in (0, 1]");
    if (max_evaluations < 50) throw ConfigError("evaluation budget must be at least 50");
    if (restarts < 1) throw ConfigError("restarts must be at least 1");
}

FitResult fit(const FitProblem& problem) {
    problem.validate();
    const Objective obj(problem);
    if (obj.n_points() <= obj.n_all()) throw ConfigError("fewer fit points than parameters");

    std::vector<Candidate> seeds = grid_search(obj, problem);
    std::vector<Candidate> starts;
    // User-supplied start first, then the best distinct grid points.
    if (std::all_of(problem.free.begin(), problem.free.end(), [](const FreeParameter& f) { return f.initial.has_value(); })) {
        RVector phys(static_cast<Eigen::Index>(obj.n_phys()));
        for (std::size_t i = 0; i < problem.free.size(); ++i) phys(static_cast<Eigen::Index>(i)) = *problem.free[i].initial;
        double scale, bg;
        const double v = obj.profile(obj.model(phys), scale, bg);
        RVector theta(static_cast<Eigen::Index>(obj.n_all()));
        theta.head(phys.size()) = phys;
        Eigen::Index k = phys.size();
        if (problem.fit_scale) theta(k++) = scale;
        if (problem.fit_background) theta(k) = bg;
        starts.push_back({theta, v});
    }
    for (const auto& c : seeds) {
        if (static_cast<int>(starts.size()) >= problem.restarts + 1) break;
        if (c.value < kPenalty) starts.push_back(c);
    }
    if (starts.empty()) throw NumericalError("model evaluation failed at every grid point");

    const int budget = std::max(20, (problem.max_evaluations - obj.evaluations()) / (static_cast<int>(starts.size()) + 1));
    Candidate best = starts.front();
    for (const auto& c : starts) {
        if (c.value < best.value) best = c;
    }
    bool nm_converged = false;
    for (const auto& s : starts) {
        bool conv = false;
        const Candidate c = nelder_mead(obj, s.theta, budget, conv);
        if (c.value <= best.value) {
            best = c;
            nm_converged = conv;
        }
    }

    // Levenberg-Marquardt polish; MINPACK only accepts decreasing steps.
    LmFunctor functor{&obj};
    Eigen::NumericalDiff<LmFunctor> numdiff(functor);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<LmFunctor>> lm(numdiff);
    lm.parameters.ftol = 1e-15;
    lm.parameters.xtol = 1e-15;
    lm.parameters.maxfev = std::max(50, problem.max_evaluations - obj.evaluations());
    Eigen::VectorXd u = u_from_theta(obj, best.theta);
    const auto status = lm.minimize(u);
    const RVector lm_theta = theta_from_u(obj, u.data());
    const double lm_value = obj.chi2_theta(lm_theta);
    bool lm_ok = status == Eigen::LevenbergMarquardtSpace::RelativeReductionTooSmall ||
                 status == Eigen::LevenbergMarquardtSpace::RelativeErrorTooSmall ||
                 status == Eigen::LevenbergMarquardtSpace::RelativeErrorAndReductionTooSmall ||
                 status == Eigen::LevenbergMarquardtSpace::CosinusTooSmall ||
                 status == Eigen::LevenbergMarquardtSpace::FtolTooSmall ||
                 status == Eigen::LevenbergMarquardtSpace::XtolTooSmall ||
                 status == Eigen::LevenbergMarquardtSpace::GtolTooSmall;
    if (lm_value <= best.value) best = {lm_theta, lm_value};

    FitResult res;
    res.model = problem.model;
    RVector phys;
    obj.unpack(best.theta, phys, res.scale, res.background);
    res.parameters = preset_parameters(problem.model, obj.overrides(phys));
    res.objective = best.value;
    res.converged = (lm_ok || nm_converged) && best.value < kPenalty;
    std::ostringstream msg;
    msg << "Levenberg-Marquardt status " << static_cast<int>(status) << (nm_converged ? "; simplex converged" : "; simplex budget exhausted");
    res.message = msg.str();

    const auto model = obj.model(phys);
    if (!model.empty()) {
        for (std::size_t g = 0; g < obj.data().size(); ++g) {
            const auto& od = obj.data()[g];
            const double c = std::pow(res.scale, od.order);
            const double b = od.order == 2 ? res.background : 0.0;
            double chi = 0.0, diff = 0.0, norm = 0.0;
            for (std::size_t i = 0; i < od.points.size(); ++i) {
                const double mv = c * model[g](static_cast<Eigen::Index>(i)) + b;
                chi += std::pow((mv - od.points[i].value) * od.points[i].weight, 2);
                diff += std::pow(mv - od.points[i].value, 2);
                norm += std::pow(od.points[i].value, 2);
            }
            res.chi_square[od.order] += chi;
            res.points[od.order] += static_cast<int>(od.points.size());
            res.relative_residual[od.order] = norm > 0.0 ? std::sqrt(diff / norm) : std::sqrt(diff);
        }
    }
    fill_covariance(obj, problem, best.theta, res);
    res.evaluations = obj.evaluations();
    if (!res.converged) res.message += "; not converged within the evaluation budget (best-so-far reported)";
    if (res.covariance_singular) res.message += "; covariance singular";
    return res;
}

FitResult fit_spin3(const FitProblem& problem) {
    if (problem.model != "spin3") throw ConfigError("fit_spin3 needs the spin3 model");
    static const std::set<std::string> allowed{"Gamma", "epsilon", "gamma_updown"};
    for (const auto& f : problem.free) {
        if (!allowed.count(f.name)) {
            throw ConfigError("spin3 fits vary only Gamma, epsilon and gamma_updown, not '" + f.name + "'");
        }
    }
    for (const char* key : {"gamma_0up", "gamma_0down", "gamma_up0", "gamma_down0"}) {
        if (problem.fixed.count(key)) throw ConfigError("spin3 fits derive the tunnelling rates; remove '" + std::string(key) + "'");
    }
    return fit(problem);
}

}  // namespace polyspec
