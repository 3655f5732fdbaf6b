#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "polyspec/spectrum.hpp"
#include "polyspec/trajectory.hpp"

namespace polyspec {

struct EstimatorConfig {
    int frame_length = 512;   // N samples
    double window_s = 0.14;   // Gaussian width as a fraction of the frame duration
    int max_index = 0;        // K for the 2-D grids; 0 selects N/4 - 1
    int stride = 0;           // samples between frame starts; 0 selects N (disjoint)
    int jackknife_groups = 16;

    int effective_max_index() const { return max_index > 0 ? max_index : frame_length / 4 - 1; }
    int effective_stride() const { return stride > 0 ? stride : frame_length; }
    void validate() const;
};

struct FourierFrame {
    std::vector<cplx> coeffs;  // a_k for k = 0 .. N/2
    std::int64_t index = 0;
};

// Approximate confined Gaussian of width sigma = s N, peak 1, exactly symmetric.
std::vector<double> confined_gaussian_window(int n, double s);

// Windowed frames a_k = (T/N) sum_j g_j z_j e^{2 pi i j k / N}; needs at least two frames.
std::vector<FourierFrame> frames(const TimeTrace& trace, const EstimatorConfig& cfg);

// Unbiased multivariate cumulant estimators (k-statistics) over m paired samples.
cplx k_stat_c2(std::span<const cplx> x, std::span<const cplx> y);
cplx k_stat_c3(std::span<const cplx> x, std::span<const cplx> y, std::span<const cplx> z);
cplx k_stat_c4(std::span<const cplx> x, std::span<const cplx> y, std::span<const cplx> z,
               std::span<const cplx> w);

// The same estimators written on sample means: mean(xy) is the mean of the products.
struct Means2 {
    cplx x, y, xy;
};
struct Means3 {
    cplx x, y, z, xy, xz, yz, xyz;
};
struct Means4 {
    cplx x, y, z, w, xy, xz, xw, yz, yw, zw, xyz, xyw, xzw, yzw, xyzw;
};
cplx k_stat_c2(const Means2& s, double m);
cplx k_stat_c3(const Means3& s, double m);
cplx k_stat_c4(const Means4& s, double m);

// Streaming power sums of frame coefficients, split into jackknife groups by frame index.
// Accumulators built with the same configuration merge by addition.
class SpectrumAccumulator {
public:
    SpectrumAccumulator(const EstimatorConfig& cfg, double sample_dt, bool orders34);
    SpectrumAccumulator(const SpectrumAccumulator&);
    SpectrumAccumulator(SpectrumAccumulator&&) noexcept;
    SpectrumAccumulator& operator=(const SpectrumAccumulator&);
    SpectrumAccumulator& operator=(SpectrumAccumulator&&) noexcept;
    ~SpectrumAccumulator();

    void add_frame(std::span<const cplx> a);
    void merge(const SpectrumAccumulator& other);
    std::int64_t frame_count() const { return count_; }

    // Real parts of the window-normalised estimates; imaginary parts and jackknife errors attached.
    SpectrumGrid s2() const;
    SpectrumGrid s3() const;
    SpectrumGrid s4() const;

private:
    struct Group;
    std::size_t pair_index(int k, int l) const;  // k <= l <= K
    Group total() const;

    EstimatorConfig cfg_;
    double sample_dt_;
    bool orders34_;
    int half_;  // number of S2 bins (N/2)
    int k_max_;
    std::size_t pairs_;
    double norm2_, norm3_, norm4_;
    std::int64_t count_ = 0;
    std::vector<Group> groups_;
};

SpectrumGrid estimate_s2(const TimeTrace& trace, const EstimatorConfig& cfg);
SpectrumGrid estimate_s3(const TimeTrace& trace, const EstimatorConfig& cfg);
SpectrumGrid estimate_s4(const TimeTrace& trace, const EstimatorConfig& cfg);

struct EstimatedSpectra {
    SpectrumGrid s2, s3, s4;
};
// One pass over the frames for all three orders.
EstimatedSpectra estimate_all(const TimeTrace& trace, const EstimatorConfig& cfg);

}  // namespace polyspec
