#include "critlab/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "critlab/stats.hpp"

namespace critlab::fit {

std::size_t EventRecord::total_mass() const noexcept {
    std::size_t total = 0;
    for (auto a : fragment_sizes) {
        total += a;
    }
    return total;
}

std::size_t EventRecord::largest() const noexcept {
    std::size_t best = 0;
    for (auto a : fragment_sizes) {
        best = std::max(best, a);
    }
    return best;
}

FitRange default_fit_range(std::size_t system_size) { return {2, std::max<std::size_t>(2, system_size / 4)}; }

std::vector<double> TauGrid::values() const {
    if (!(step > 0.0) || max < min) {
        throw FitError("tau grid needs min <= max and a positive step");
    }
    const auto n = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = min + static_cast<double>(i) * step;
    }
    return out;
}

double fisher_yield(double a, double tau, double surface_coeff, double temperature, double dmu) {
    if (!(temperature > 0.0)) {
        throw std::invalid_argument("temperature must be positive");
    }
    if (!(a >= 1.0)) {
        throw std::invalid_argument("fragment size must be at least 1");
    }
    return std::pow(a, -tau) * std::exp(-(dmu * a + surface_coeff * std::cbrt(a * a)) / temperature);
}

double normalization(double tau, std::size_t a_system) {
    if (a_system == 0) {
        throw std::invalid_argument("system size must be at least 1");
    }
    // Summed smallest terms first.
    double sum = 0.0;
    for (std::size_t a = a_system; a >= 1; --a) {
        sum += std::pow(static_cast<double>(a), 1.0 - tau);
    }
    return 1.0 / sum;
}

void HistogramAccumulator::add(const std::map<std::size_t, std::size_t>& counts, std::size_t mass) {
    ++n_events_;
    if (mass == 0) {
        return;
    }
    for (const auto& [a, c] : counts) {
        const double n_a = static_cast<double>(c) / static_cast<double>(mass);
        sum_[a] += n_a;
        sumsq_[a] += n_a * n_a;
    }
}

void HistogramAccumulator::add(const EventRecord& event, std::size_t system_size) {
    std::map<std::size_t, std::size_t> counts;
    for (auto a : event.fragment_sizes) {
        ++counts[a];
    }
    add(counts, system_size > 0 ? system_size : event.total_mass());
}

YieldHistogram HistogramAccumulator::result() const {
    YieldHistogram h;
    h.n_events = n_events_;
    const auto n = static_cast<double>(n_events_);
    for (const auto& [a, s] : sum_) {
        const double mean = s / n;
        h.mean[a] = mean;
        double se = 0.0;
        if (n_events_ > 1) {
            const double var = std::max(0.0, (sumsq_.at(a) - n * mean * mean) / (n - 1.0));
            se = std::sqrt(var / n);
        }
        h.se[a] = se;
    }
    return h;
}

YieldHistogram build_histogram(const std::vector<EventRecord>& events, std::size_t system_size) {
    HistogramAccumulator acc;
    for (const auto& ev : events) {
        acc.add(ev, system_size);
    }
    return acc.result();
}

namespace {

struct Bin {
    double a, y, w;
};

std::vector<Bin> usable_bins(const YieldHistogram& histogram, FitRange range) {
    if (range.a_min < 1 || range.a_max < range.a_min) {
        throw FitError("fit range must satisfy 1 <= a_min <= a_max");
    }
    std::vector<Bin> bins;
    double se_floor = std::numeric_limits<double>::infinity();
    bool any_value = false;
    for (auto it = histogram.mean.lower_bound(range.a_min);
         it != histogram.mean.end() && it->first <= range.a_max; ++it) {
        if (it->second > 0.0) {
            any_value = true;
            const double se = histogram.se.count(it->first) ? histogram.se.at(it->first) : 0.0;
            if (se > 0.0) {
                se_floor = std::min(se_floor, se);
            }
        }
    }
    if (!any_value) {
        throw FitError("no nonzero yield inside the fit range");
    }
    // Nonzero bins without spread get the smallest observed error; when no bin
    // has spread at all the fit falls back to unit weights.
    if (!std::isfinite(se_floor)) {
        se_floor = 1.0;
    }
    for (auto it = histogram.mean.lower_bound(range.a_min);
         it != histogram.mean.end() && it->first <= range.a_max; ++it) {
        if (it->second <= 0.0) {
            continue;
        }
        double se = histogram.se.count(it->first) ? histogram.se.at(it->first) : 0.0;
        if (!(se > 0.0)) {
            se = se_floor;
        }
        bins.push_back({static_cast<double>(it->first), it->second, 1.0 / (se * se)});
    }
    return bins;
}

Chi2Point chi2_bins(const std::vector<Bin>& bins, double tau) {
    double sxy = 0.0, sxx = 0.0;
    for (const auto& b : bins) {
        const double x = std::pow(b.a, -tau);
        sxy += b.w * x * b.y;
        sxx += b.w * x * x;
    }
    const double q0 = sxy / sxx;
    double chi2 = 0.0;
    for (const auto& b : bins) {
        const double r = b.y - q0 * std::pow(b.a, -tau);
        chi2 += b.w * r * r;
    }
    return {chi2, q0, bins.size()};
}

}  // namespace

Chi2Point chi2_at(const YieldHistogram& histogram, FitRange range, double tau) {
    return chi2_bins(usable_bins(histogram, range), tau);
}

PowerLawFit fit_tau(const YieldHistogram& histogram, FitRange range, const TauGrid& grid) {
    const auto bins = usable_bins(histogram, range);
    const auto taus = grid.values();
    std::vector<Chi2Point> points;
    points.reserve(taus.size());
    std::size_t best = 0;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        points.push_back(chi2_bins(bins, taus[i]));
        if (points[i].chi2 < points[best].chi2) {
            best = i;
        }
    }
    double tau = taus[best];
    Chi2Point at = points[best];
    double tau_se = std::numeric_limits<double>::quiet_NaN();
    if (best > 0 && best + 1 < taus.size()) {
        const double c0 = points[best - 1].chi2, c1 = points[best].chi2, c2 = points[best + 1].chi2;
        const double curvature = c0 - 2.0 * c1 + c2;
        if (curvature > 0.0) {
            tau_se = grid.step * std::sqrt(2.0 / curvature);
            const double vertex = taus[best] + 0.5 * grid.step * (c0 - c2) / curvature;
            const Chi2Point refined = chi2_bins(bins, vertex);
            if (refined.chi2 <= at.chi2) {
                tau = vertex;
                at = refined;
            }
        }
    }
    PowerLawFit fit;
    fit.tau = tau;
    fit.q0 = at.q0;
    fit.chi2 = at.chi2;
    fit.n_bins = bins.size();
    fit.ndof = bins.size() > 2 ? bins.size() - 2 : 0;
    fit.fit_range = range;
    fit.n_events = histogram.n_events;
    fit.tau_se = tau_se * std::sqrt(std::max(1.0, fit.chi2_reduced()));
    return fit;
}

CriticalMultiplicity critical_multiplicity(const std::vector<EventRecord>& events, const TauGrid& grid,
                                           FitRange range, std::size_t min_events, std::size_t system_size) {
    if (events.empty()) {
        throw FitError("no events");
    }
    std::map<std::size_t, std::vector<std::size_t>> by_m;
    for (std::size_t i = 0; i < events.size(); ++i) {
        by_m[events[i].multiplicity()].push_back(i);
    }
    // Merge consecutive multiplicities into bins of at least min_events.
    std::vector<std::vector<std::size_t>> members;
    std::vector<MultiplicityBin> bins;
    for (const auto& [m, idx] : by_m) {
        if (bins.empty() || bins.back().n_events >= min_events) {
            bins.push_back({m, m, m, 0, std::nullopt});
            members.emplace_back();
        }
        auto& bin = bins.back();
        bin.m_hi = m;
        if (idx.size() > by_m.at(bin.m_representative).size()) {
            bin.m_representative = m;
        }
        bin.n_events += idx.size();
        members.back().insert(members.back().end(), idx.begin(), idx.end());
    }
    if (bins.size() > 1 && bins.back().n_events < min_events) {
        auto tail = bins.back();
        auto tail_members = members.back();
        bins.pop_back();
        members.pop_back();
        auto& prev = bins.back();
        prev.m_hi = tail.m_hi;
        if (by_m.at(tail.m_representative).size() > by_m.at(prev.m_representative).size()) {
            prev.m_representative = tail.m_representative;
        }
        prev.n_events += tail.n_events;
        members.back().insert(members.back().end(), tail_members.begin(), tail_members.end());
    }

    std::size_t fitted = 0;
    for (std::size_t b = 0; b < bins.size(); ++b) {
        std::vector<EventRecord> subset;
        subset.reserve(members[b].size());
        for (auto i : members[b]) {
            subset.push_back(events[i]);
        }
        try {
            bins[b].fit = fit_tau(build_histogram(subset, system_size), range, grid);
            ++fitted;
        } catch (const FitError&) {
        }
    }

    CriticalMultiplicity out;
    out.bins = bins;
    if (bins.size() == 1) {
        out.degenerate = true;
        out.m_c = bins.front().m_representative;
        return out;
    }
    if (fitted < 3) {
        throw FitError("critical multiplicity needs at least three fittable multiplicity bins");
    }
    const MultiplicityBin* best = nullptr;
    for (const auto& bin : out.bins) {
        if (bin.fit && (!best || bin.fit->chi2_reduced() < best->fit->chi2_reduced())) {
            best = &bin;
        }
    }
    out.m_c = best->m_representative;
    return out;
}

MomentSeries moments(const std::vector<EventRecord>& events, int k, bool exclude_largest, std::size_t system_size) {
    if (k != 1 && k != 2) {
        throw std::invalid_argument("moment order must be 1 or 2");
    }
    std::map<double, std::pair<RunningStats, RunningStats>> groups;
    for (const auto& ev : events) {
        const std::size_t mass = system_size > 0 ? system_size : ev.total_mass();
        double m = 0.0;
        bool skipped = !exclude_largest;
        const std::size_t largest = ev.largest();
        for (auto a : ev.fragment_sizes) {
            if (!skipped && a == largest) {
                skipped = true;
                continue;
            }
            m += std::pow(static_cast<double>(a), k);
        }
        if (mass > 0) {
            m /= static_cast<double>(mass);
        }
        auto& [mk, amax] = groups[ev.control.value_or(0.0)];
        mk.add(m);
        amax.add(static_cast<double>(largest));
    }
    MomentSeries series;
    for (const auto& [control, acc] : groups) {
        series.push_back({control, acc.first.mean(), acc.first.se(), acc.second.mean(), acc.second.se(),
                          acc.first.count()});
    }
    return series;
}

namespace {

ExponentEstimate log_slope(const std::vector<std::pair<double, double>>& series, double critical_point,
                           ScalingWindow window) {
    if (critical_point == 0.0) {
        throw FitError("critical point must be nonzero to form a reduced parameter");
    }
    std::vector<double> x, y;
    ExponentEstimate est;
    est.eps_min = std::numeric_limits<double>::infinity();
    est.eps_max = 0.0;
    for (const auto& [c, v] : series) {
        const double eps = (c - critical_point) / critical_point;
        const bool on_side = window.side == Side::Below ? eps < 0.0 : eps > 0.0;
        const double mag = std::abs(eps);
        if (!on_side || mag < window.eps_min || mag > window.eps_max) {
            continue;
        }
        if (!(v > 0.0)) {
            throw FitError("scaling series values must be positive");
        }
        x.push_back(std::log(mag));
        y.push_back(std::log(v));
        est.eps_min = std::min(est.eps_min, mag);
        est.eps_max = std::max(est.eps_max, mag);
    }
    if (x.size() < 5) {
        throw FitError("scaling fit needs at least five points on the chosen side");
    }
    const LineFit line = fit_line(x, y);
    est.value = line.slope;
    est.error = line.slope_se;
    est.n_points = x.size();
    return est;
}

}  // namespace

ExponentEstimate extract_gamma(const std::vector<std::pair<double, double>>& series, double critical_point,
                               ScalingWindow window) {
    auto est = log_slope(series, critical_point, window);
    est.value = -est.value;
    return est;
}

ExponentEstimate extract_beta(const std::vector<std::pair<double, double>>& series, double critical_point,
                              ScalingWindow window) {
    return log_slope(series, critical_point, window);
}

std::vector<std::size_t> sample_fisher(std::size_t count, std::size_t a_system, double tau, double surface_coeff,
                                       double temperature, double dmu, RngStream& rng) {
    std::vector<double> cumulative(a_system);
    double total = 0.0;
    for (std::size_t a = 1; a <= a_system; ++a) {
        total += fisher_yield(static_cast<double>(a), tau, surface_coeff, temperature, dmu);
        cumulative[a - 1] = total;
    }
    std::vector<std::size_t> out(count);
    for (auto& s : out) {
        const double u = rng.uniform() * total;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        s = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                               static_cast<std::ptrdiff_t>(a_system) - 1)) +
            1;
    }
    return out;
}

}  // namespace critlab::fit
