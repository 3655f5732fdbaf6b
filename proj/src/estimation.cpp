#include "polyspec/estimation.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>

#include "polyspec/parallel.hpp"

namespace polyspec {

namespace {

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// r2c transform of one frame; a_k = conj of FFTW's e^{-i} output.
class FrameTransform {
public:
    FrameTransform(std::vector<double> window, double dt) : window_(std::move(window)), dt_(dt) {
        const int n = static_cast<int>(window_.size());
        in_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
        out_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
    }
    ~FrameTransform() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(in_);
        fftw_free(out_);
    }
    FrameTransform(const FrameTransform&) = delete;
    FrameTransform& operator=(const FrameTransform&) = delete;

    void run(const double* z, std::vector<cplx>& a) {
        const std::size_t n = window_.size();
        for (std::size_t j = 0; j < n; ++j) in_[j] = dt_ * window_[j] * z[j];
        fftw_execute(plan_);
        a.resize(n / 2 + 1);
        for (std::size_t k = 0; k < a.size(); ++k) a[k] = cplx(out_[k][0], -out_[k][1]);
    }

private:
    std::vector<double> window_;
    double dt_;
    double* in_ = nullptr;
    fftw_complex* out_ = nullptr;
    fftw_plan plan_ = nullptr;
};

void require_samples(std::size_t have, std::size_t need, const char* what) {
    if (have < need) {
        std::ostringstream msg;
        msg << what << " needs at least " << need << " samples, got " << have;
        throw ConfigError(msg.str());
    }
}

template <typename T>
void add_into(std::vector<T>& a, const std::vector<T>& b, double sign) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += sign * b[i];
}

}  // namespace

void EstimatorConfig::validate() const {
    if (frame_length < 8) throw ConfigError("frame length must be at least 8 samples");
    if (!(window_s > 0.0 && window_s < 0.5)) throw ConfigError("window parameter s must lie in (0, 0.5)");
    if (max_index < 0) throw ConfigError("max frequency index must be non-negative");
    if (2 * effective_max_index() >= frame_length / 2) {
        throw ConfigError("max frequency index K = " + std::to_string(effective_max_index()) +
                          " beyond Nyquist: need 2K < N/2 = " + std::to_string(frame_length / 2));
    }
    if (stride < 0) throw ConfigError("frame stride must be positive");
    if (jackknife_groups < 2) throw ConfigError("at least two jackknife groups are needed");
}

std::vector<double> confined_gaussian_window(int n, double s) {
    if (n < 2) throw ConfigError("window length must be at least 2");
    if (!(s > 0.0 && s < 0.5)) throw ConfigError("window parameter s must lie in (0, 0.5)");
    const double sigma = s * n;
    const double centre = 0.5 * (n - 1);
    auto gauss = [&](double x) {
        const double u = (x - centre) / (2.0 * sigma);
        return std::exp(-u * u);
    };
    const double corr = gauss(-0.5) / (gauss(-0.5 + n) + gauss(-0.5 - n));
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int j = 0; j < (n + 1) / 2; ++j) {
        const double v = gauss(j) - corr * (gauss(j + n) + gauss(j - n));
        g[static_cast<std::size_t>(j)] = v;
        g[static_cast<std::size_t>(n - 1 - j)] = v;
    }
    const double peak = *std::max_element(g.begin(), g.end());
    for (double& v : g) v /= peak;
    return g;
}

std::vector<FourierFrame> frames(const TimeTrace& trace, const EstimatorConfig& cfg) {
    cfg.validate();
    trace.validate();
    const auto n = static_cast<std::size_t>(cfg.frame_length);
    require_samples(trace.samples.size(), 2 * n, "framing");
    const auto stride = static_cast<std::size_t>(cfg.effective_stride());
    const std::size_t m = (trace.samples.size() - n) / stride + 1;
    FrameTransform ft(confined_gaussian_window(cfg.frame_length, cfg.window_s), trace.dt);
    std::vector<FourierFrame> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        out[i].index = static_cast<std::int64_t>(i);
        ft.run(trace.samples.data() + i * stride, out[i].coeffs);
    }
    return out;
}

// --- k-statistics -------------------------------------------------------------------------

cplx k_stat_c2(const Means2& s, double m) {
    if (m < 2) throw ConfigError("c2 needs at least 2 samples");
    return m / (m - 1.0) * (s.xy - s.x * s.y);
}

cplx k_stat_c3(const Means3& s, double m) {
    if (m < 3) throw ConfigError("c3 needs at least 3 samples");
    return m * m / ((m - 1.0) * (m - 2.0)) *
           (s.xyz - s.xy * s.z - s.xz * s.y - s.yz * s.x + 2.0 * s.x * s.y * s.z);
}

cplx k_stat_c4(const Means4& s, double m) {
    if (m < 4) throw ConfigError("c4 needs at least 4 samples");
    const cplx triples = s.xyz * s.w + s.xyw * s.z + s.xzw * s.y + s.yzw * s.x;
    const cplx pairs = s.xy * s.zw + s.xz * s.yw + s.xw * s.yz;
    const cplx pair_singles = s.xy * s.z * s.w + s.xz * s.y * s.w + s.xw * s.y * s.z + s.yz * s.x * s.w +
                              s.yw * s.x * s.z + s.zw * s.x * s.y;
    return m * m / ((m - 1.0) * (m - 2.0) * (m - 3.0)) *
           ((m + 1.0) * s.xyzw - (m + 1.0) * triples - (m - 1.0) * pairs + 2.0 * m * pair_singles -
            6.0 * m * s.x * s.y * s.z * s.w);
}

namespace {

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b) throw ConfigError("k-statistic inputs must have equal length");
}

cplx mean_of(std::span<const cplx> x) {
    cplx s = 0.0;
    for (const cplx& v : x) s += v;
    return s / static_cast<double>(x.size());
}

template <typename... Spans>
cplx mean_product(std::size_t n, const Spans&... spans) {
    cplx s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (spans[i] * ...);
    return s / static_cast<double>(n);
}

}  // namespace

cplx k_stat_c2(std::span<const cplx> x, std::span<const cplx> y) {
    check_lengths(x.size(), y.size());
    const std::size_t n = x.size();
    if (n < 2) throw ConfigError("c2 needs at least 2 samples");
    return k_stat_c2(Means2{mean_of(x), mean_of(y), mean_product(n, x, y)}, static_cast<double>(n));
}

cplx k_stat_c3(std::span<const cplx> x, std::span<const cplx> y, std::span<const cplx> z) {
    check_lengths(x.size(), y.size());
    check_lengths(x.size(), z.size());
    const std::size_t n = x.size();
    if (n < 3) throw ConfigError("c3 needs at least 3 samples");
    Means3 s{mean_of(x),          mean_of(y),          mean_of(z),          mean_product(n, x, y),
             mean_product(n, x, z), mean_product(n, y, z), mean_product(n, x, y, z)};
    return k_stat_c3(s, static_cast<double>(n));
}

cplx k_stat_c4(std::span<const cplx> x, std::span<const cplx> y, std::span<const cplx> z,
               std::span<const cplx> w) {
    check_lengths(x.size(), y.size());
    check_lengths(x.size(), z.size());
    check_lengths(x.size(), w.size());
    const std::size_t n = x.size();
    if (n < 4) throw ConfigError("c4 needs at least 4 samples");
    Means4 s{mean_of(x),
             mean_of(y),
             mean_of(z),
             mean_of(w),
             mean_product(n, x, y),
             mean_product(n, x, z),
             mean_product(n, x, w),
             mean_product(n, y, z),
             mean_product(n, y, w),
             mean_product(n, z, w),
             mean_product(n, x, y, z),
             mean_product(n, x, y, w),
             mean_product(n, x, z, w),
             mean_product(n, y, z, w),
             mean_product(n, x, y, z, w)};
    return k_stat_c4(s, static_cast<double>(n));
}

// --- accumulator --------------------------------------------------------------------------

struct SpectrumAccumulator::Group {
    double m = 0.0;
    std::vector<cplx> x;     // a_k
    std::vector<double> xx;  // |a_k|^2
    // pairs k <= l <= K
    std::vector<cplx> kl;        // a_k a_l
    std::vector<cplx> kl_conj;   // a_k a_l*
    std::vector<cplx> kkl;       // |a_k|^2 a_l
    std::vector<cplx> kll;       // a_k |a_l|^2
    std::vector<double> kkll;    // |a_k|^2 |a_l|^2
    std::vector<cplx> k_sum;     // a_k a_{k+l}*
    std::vector<cplx> l_sum;     // a_l a_{k+l}*
    std::vector<cplx> kl_sum;    // a_k a_l a_{k+l}*

    void resize(std::size_t bins, std::size_t pairs) {
        x.assign(bins, 0.0);
        xx.assign(bins, 0.0);
        for (auto* v : {&kl, &kl_conj, &kkl, &kll, &k_sum, &l_sum, &kl_sum}) v->assign(pairs, 0.0);
        kkll.assign(pairs, 0.0);
    }
    void add(const Group& o, double sign) {
        m += sign * o.m;
        add_into(x, o.x, sign);
        add_into(xx, o.xx, sign);
        add_into(kl, o.kl, sign);
        add_into(kl_conj, o.kl_conj, sign);
        add_into(kkl, o.kkl, sign);
        add_into(kll, o.kll, sign);
        add_into(kkll, o.kkll, sign);
        add_into(k_sum, o.k_sum, sign);
        add_into(l_sum, o.l_sum, sign);
        add_into(kl_sum, o.kl_sum, sign);
    }
};

SpectrumAccumulator::SpectrumAccumulator(const EstimatorConfig& cfg, double sample_dt, bool orders34)
    : cfg_(cfg), sample_dt_(sample_dt), orders34_(orders34) {
    cfg_.validate();
    if (!(sample_dt > 0.0)) throw ConfigError("sample interval must be positive");
    half_ = cfg_.frame_length / 2;
    k_max_ = cfg_.effective_max_index();
    pairs_ = orders34_ ? static_cast<std::size_t>(k_max_ + 1) * static_cast<std::size_t>(k_max_ + 2) / 2 : 0;
    const auto g = confined_gaussian_window(cfg_.frame_length, cfg_.window_s);
    norm2_ = norm3_ = norm4_ = 0.0;
    for (double v : g) {
        norm2_ += v * v;
        norm3_ += v * v * v;
        norm4_ += v * v * v * v;
    }
    groups_.resize(static_cast<std::size_t>(cfg_.jackknife_groups));
    for (auto& grp : groups_) grp.resize(static_cast<std::size_t>(half_), pairs_);
}

SpectrumAccumulator::SpectrumAccumulator(const SpectrumAccumulator&) = default;
SpectrumAccumulator::SpectrumAccumulator(SpectrumAccumulator&&) noexcept = default;
SpectrumAccumulator& SpectrumAccumulator::operator=(const SpectrumAccumulator&) = default;
SpectrumAccumulator& SpectrumAccumulator::operator=(SpectrumAccumulator&&) noexcept = default;
SpectrumAccumulator::~SpectrumAccumulator() = default;

std::size_t SpectrumAccumulator::pair_index(int k, int l) const {
    // row k holds l = k .. K
    const auto kk = static_cast<std::size_t>(k);
    const auto kmax = static_cast<std::size_t>(k_max_);
    return kk * (kmax + 1) - kk * (kk - 1) / 2 + static_cast<std::size_t>(l - k);
}

void SpectrumAccumulator::add_frame(std::span<const cplx> a) {
    if (a.size() < static_cast<std::size_t>(half_)) throw ConfigError("frame has too few coefficients");
    Group& g = groups_[static_cast<std::size_t>(count_ % cfg_.jackknife_groups)];
    ++count_;
    g.m += 1.0;
    for (int k = 0; k < half_; ++k) {
        g.x[k] += a[k];
        g.xx[k] += std::norm(a[k]);
    }
    if (!orders34_) return;
    std::size_t p = 0;
    for (int k = 0; k <= k_max_; ++k) {
        const cplx ak = a[k];
        const double nk = std::norm(ak);
        for (int l = k; l <= k_max_; ++l, ++p) {
            const cplx al = a[l];
            const double nl = std::norm(al);
            const cplx s_conj = std::conj(a[k + l]);
            const cplx prod = ak * al;
            g.kl[p] += prod;
            g.kl_conj[p] += ak * std::conj(al);
            g.kkl[p] += nk * al;
            g.kll[p] += nl * ak;
            g.kkll[p] += nk * nl;
            g.k_sum[p] += ak * s_conj;
            g.l_sum[p] += al * s_conj;
            g.kl_sum[p] += prod * s_conj;
        }
    }
}

void SpectrumAccumulator::merge(const SpectrumAccumulator& other) {
    if (other.cfg_.frame_length != cfg_.frame_length || other.k_max_ != k_max_ ||
        other.groups_.size() != groups_.size() || other.orders34_ != orders34_ ||
        other.cfg_.window_s != cfg_.window_s || other.sample_dt_ != sample_dt_) {
        throw ConfigError("cannot merge accumulators with different configurations");
    }
    // Keep round-robin group assignment consistent: other's frames continue after ours.
    const auto ng = static_cast<std::int64_t>(groups_.size());
    for (std::int64_t j = 0; j < ng; ++j) {
        groups_[static_cast<std::size_t>((j + count_) % ng)].add(other.groups_[static_cast<std::size_t>(j)], 1.0);
    }
    count_ += other.count_;
}

SpectrumAccumulator::Group SpectrumAccumulator::total() const {
    Group t;
    t.resize(static_cast<std::size_t>(half_), pairs_);
    for (const auto& g : groups_) t.add(g, 1.0);
    return t;
}

namespace {

// Evaluates `estimate(sums)` on the full sums and on every leave-one-group-out subset.
template <typename Group, typename Fn>
void with_jackknife(const Group& total, const std::vector<Group>& groups, double min_m, Fn&& estimate,
                    RMatrix& values, RMatrix& imag, std::optional<RMatrix>& errors) {
    estimate(total, values, imag);
    std::vector<const Group*> usable;
    for (const auto& g : groups) {
        if (g.m > 0 && total.m - g.m >= min_m) usable.push_back(&g);
    }
    if (usable.size() < 2) return;
    const double ng = static_cast<double>(usable.size());
    RMatrix sum = RMatrix::Zero(values.rows(), values.cols());
    RMatrix sum_sq = RMatrix::Zero(values.rows(), values.cols());
    RMatrix v(values.rows(), values.cols()), im(values.rows(), values.cols());
    for (const Group* g : usable) {
        Group loo = total;
        loo.add(*g, -1.0);
        estimate(loo, v, im);
        sum += v;
        sum_sq += v.cwiseProduct(v);
    }
    const RMatrix mean = sum / ng;
    RMatrix var = (sum_sq / ng - mean.cwiseProduct(mean)).cwiseMax(0.0);
    errors = ((ng - 1.0) * var).cwiseSqrt();
}

}  // namespace

SpectrumGrid SpectrumAccumulator::s2() const {
    if (count_ < 2) throw ConfigError("S2 estimate needs at least 2 frames");
    const double frame_t = cfg_.frame_length * sample_dt_;
    SpectrumGrid grid;
    grid.order = 2;
    grid.source = "estimate";
    grid.frames = static_cast<int>(count_);
    grid.overlapping_frames = cfg_.effective_stride() < cfg_.frame_length;
    grid.sample_dt = sample_dt_;
    for (int k = 0; k < half_; ++k) grid.axis1.push_back(kTwoPi * k / frame_t);
    const double norm = sample_dt_ * norm2_;
    auto estimate = [&](const Group& s, RMatrix& v, RMatrix& im) {
        v.resize(half_, 1);
        im.resize(half_, 1);
        for (int k = 0; k < half_; ++k) {
            const cplx c = k_stat_c2(Means2{s.x[k] / s.m, std::conj(s.x[k]) / s.m, cplx(s.xx[k] / s.m)}, s.m) / norm;
            v(k, 0) = c.real();
            im(k, 0) = c.imag();
        }
    };
    RMatrix imag;
    with_jackknife(total(), groups_, 2.0, estimate, grid.values, imag, grid.errors);
    grid.imag = std::move(imag);
    grid.validate();
    return grid;
}

SpectrumGrid SpectrumAccumulator::s3() const {
    if (!orders34_) throw ConfigError("accumulator was built without orders 3 and 4");
    if (count_ < 3) throw ConfigError("S3 estimate needs at least 3 frames");
    const double frame_t = cfg_.frame_length * sample_dt_;
    SpectrumGrid grid;
    grid.order = 3;
    grid.source = "estimate";
    grid.frames = static_cast<int>(count_);
    grid.overlapping_frames = cfg_.effective_stride() < cfg_.frame_length;
    grid.sample_dt = sample_dt_;
    for (int k = 0; k <= k_max_; ++k) grid.axis1.push_back(kTwoPi * k / frame_t);
    grid.axis2 = grid.axis1;
    const double norm = sample_dt_ * norm3_;
    const int n = k_max_ + 1;
    auto estimate = [&](const Group& s, RMatrix& v, RMatrix& im) {
        v.resize(n, n);
        im.resize(n, n);
        const double m = s.m;
        for (int k = 0; k <= k_max_; ++k) {
            for (int l = k; l <= k_max_; ++l) {
                const std::size_t p = pair_index(k, l);
                Means3 mm{s.x[k] / m,       s.x[l] / m,       std::conj(s.x[k + l]) / m, s.kl[p] / m,
                          s.k_sum[p] / m,   s.l_sum[p] / m,   s.kl_sum[p] / m};
                const cplx c = k_stat_c3(mm, m) / norm;
                v(k, l) = v(l, k) = c.real();
                im(k, l) = im(l, k) = c.imag();
            }
        }
    };
    RMatrix imag;
    with_jackknife(total(), groups_, 3.0, estimate, grid.values, imag, grid.errors);
    grid.imag = std::move(imag);
    grid.validate();
    return grid;
}

SpectrumGrid SpectrumAccumulator::s4() const {
    if (!orders34_) throw ConfigError("accumulator was built without orders 3 and 4");
    if (count_ < 4) throw ConfigError("S4 estimate needs at least 4 frames");
    const double frame_t = cfg_.frame_length * sample_dt_;
    SpectrumGrid grid;
    grid.order = 4;
    grid.source = "estimate";
    grid.frames = static_cast<int>(count_);
    grid.overlapping_frames = cfg_.effective_stride() < cfg_.frame_length;
    grid.sample_dt = sample_dt_;
    for (int k = 0; k <= k_max_; ++k) grid.axis1.push_back(kTwoPi * k / frame_t);
    grid.axis2 = grid.axis1;
    const double norm = sample_dt_ * norm4_;
    const int n = k_max_ + 1;
    auto estimate = [&](const Group& s, RMatrix& v, RMatrix& im) {
        v.resize(n, n);
        im.resize(n, n);
        const double m = s.m;
        for (int k = 0; k <= k_max_; ++k) {
            for (int l = k; l <= k_max_; ++l) {
                const std::size_t p = pair_index(k, l);
                // x = a_k, y = a_k*, z = a_l, w = a_l*
                const cplx xk = s.x[k] / m, xl = s.x[l] / m;
                const cplx kl = s.kl[p] / m, klc = s.kl_conj[p] / m;
                const cplx kkl = s.kkl[p] / m, kll = s.kll[p] / m;
                Means4 mm{xk,
                          std::conj(xk),
                          xl,
                          std::conj(xl),
                          cplx(s.xx[k] / m),
                          kl,
                          klc,
                          std::conj(klc),
                          std::conj(kl),
                          cplx(s.xx[l] / m),
                          kkl,
                          std::conj(kkl),
                          kll,
                          std::conj(kll),
                          cplx(s.kkll[p] / m)};
                const cplx c = k_stat_c4(mm, m) / norm;
                v(k, l) = v(l, k) = c.real();
                im(k, l) = im(l, k) = c.imag();
            }
        }
    };
    RMatrix imag;
    with_jackknife(total(), groups_, 4.0, estimate, grid.values, imag, grid.errors);
    grid.imag = std::move(imag);
    grid.validate();
    return grid;
}

namespace {

SpectrumAccumulator accumulate(const TimeTrace& trace, const EstimatorConfig& cfg, bool orders34) {
    cfg.validate();
    trace.validate();
    const auto n = static_cast<std::size_t>(cfg.frame_length);
    require_samples(trace.samples.size(), 2 * n, "spectrum estimation");
    const auto stride = static_cast<std::size_t>(cfg.effective_stride());
    const std::size_t m = (trace.samples.size() - n) / stride + 1;
    const auto window = confined_gaussian_window(cfg.frame_length, cfg.window_s);

    // Fixed chunking keeps the summation order, and so the output bits, independent of the thread count.
    const std::size_t workers = std::clamp<std::size_t>(m / 256, 1, 16);
    std::vector<std::unique_ptr<SpectrumAccumulator>> parts(workers);
    const std::size_t chunk = (m + workers - 1) / workers;
    parallel_for(workers, [&](std::size_t w) {
        auto acc = std::make_unique<SpectrumAccumulator>(cfg, trace.dt, orders34);
        FrameTransform ft(window, trace.dt);
        std::vector<cplx> a;
        const std::size_t end = std::min(m, (w + 1) * chunk);
        for (std::size_t i = w * chunk; i < end; ++i) {
            ft.run(trace.samples.data() + i * stride, a);
            acc->add_frame(a);
        }
        parts[w] = std::move(acc);
    });
    for (std::size_t w = 1; w < workers; ++w) parts[0]->merge(*parts[w]);
    return std::move(*parts[0]);
}

}  // namespace

SpectrumGrid estimate_s2(const TimeTrace& trace, const EstimatorConfig& cfg) {
    return accumulate(trace, cfg, false).s2();
}

SpectrumGrid estimate_s3(const TimeTrace& trace, const EstimatorConfig& cfg) {
    return accumulate(trace, cfg, true).s3();
}

SpectrumGrid estimate_s4(const TimeTrace& trace, const EstimatorConfig& cfg) {
    return accumulate(trace, cfg, true).s4();
}

EstimatedSpectra estimate_all(const TimeTrace& trace, const EstimatorConfig& cfg) {
    const SpectrumAccumulator acc = accumulate(trace, cfg, true);
    return {acc.s2(), acc.s3(), acc.s4()};
}

}  // namespace polyspec
