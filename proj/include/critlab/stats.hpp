#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace critlab {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

/// Sample mean and standard error of the mean (n - 1 variance).
MeanSe mean_se(std::span<const double> values);

/// Mean and standard error from equal-size contiguous blocks. Trailing
/// samples that do not fill a block are dropped.
MeanSe blocked_mean_se(std::span<const double> values, std::size_t n_blocks);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    std::size_t n = 0;
};

/// Ordinary least squares y = intercept + slope * x. Needs at least two
/// distinct x values; slope_se is zero for exactly two points.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Running mean and variance (Welford).
class RunningStats {
public:
    void add(double x) noexcept;
    std::size_t count() const noexcept { return n_; }
    double mean() const noexcept { return mean_; }
    double variance() const noexcept;
    double se() const noexcept;

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

}  // namespace critlab
