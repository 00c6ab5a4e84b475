#include "critlab/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace critlab {

MeanSe mean_se(std::span<const double> values) {
    RunningStats acc;
    for (double v : values) {
        acc.add(v);
    }
    return {acc.mean(), acc.se()};
}

MeanSe blocked_mean_se(std::span<const double> values, std::size_t n_blocks) {
    if (n_blocks < 2 || values.size() < n_blocks) {
        return mean_se(values);
    }
    const std::size_t block = values.size() / n_blocks;
    std::vector<double> means;
    means.reserve(n_blocks);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        double sum = 0.0;
        for (std::size_t i = 0; i < block; ++i) {
            sum += values[b * block + i];
        }
        means.push_back(sum / static_cast<double>(block));
    }
    return mean_se(means);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("line fit needs at least two (x, y) pairs");
    }
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) {
        throw std::invalid_argument("line fit needs distinct x values");
    }
    LineFit fit;
    fit.n = x.size();
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (x.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            rss += r * r;
        }
        fit.slope_se = std::sqrt(rss / (n - 2.0) / sxx);
    }
    return fit;
}

void RunningStats::add(double x) noexcept {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
}

double RunningStats::variance() const noexcept {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

double RunningStats::se() const noexcept {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

}  // namespace critlab
