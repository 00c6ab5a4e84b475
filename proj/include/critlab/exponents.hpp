#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "critlab/rng.hpp"

namespace critlab::fit {

/// One simulated event: its fragment (cluster) sizes and, optionally, the
/// control parameter of the ensemble it belongs to.
struct EventRecord {
    std::vector<std::size_t> fragment_sizes;
    std::optional<double> control;

    std::size_t multiplicity() const noexcept { return fragment_sizes.size(); }
    std::size_t total_mass() const noexcept;
    std::size_t largest() const noexcept;
};

/// Rejected input to a fit (empty range, no usable bins, too few points, ...).
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FitRange {
    std::size_t a_min = 2;
    std::size_t a_max = 0;
};

/// Default range [2, system_size / 4], never narrower than [2, 2].
FitRange default_fit_range(std::size_t system_size);

struct TauGrid {
    double min = 2.0;
    double max = 3.0;
    double step = 0.01;

    std::vector<double> values() const;
};

/// Fisher droplet yield without the overall prefactor:
/// A^-tau * exp(-(dmu * A + surface_coeff * A^(2/3)) / T).
double fisher_yield(double a, double tau, double surface_coeff, double temperature, double dmu);

/// q0 = 1 / sum_{A=1}^{a_system} A^(1 - tau), so that q0 A^-tau has unit first moment.
double normalization(double tau, std::size_t a_system);

/// Per-size mean of the normalized yield n_A over events, with standard errors.
struct YieldHistogram {
    std::map<std::size_t, double> mean;
    std::map<std::size_t, double> se;
    std::size_t n_events = 0;
};

/// n_A of one event is (fragments of size A) / system_size. A system size of
/// zero means "each event's total mass".
YieldHistogram build_histogram(const std::vector<EventRecord>& events, std::size_t system_size = 0);

/// Streaming form of build_histogram for ensembles too large to keep.
class HistogramAccumulator {
public:
    /// Adds one event given as size -> fragment count over `mass` elements.
    /// An event with zero mass still counts toward the event total.
    void add(const std::map<std::size_t, std::size_t>& counts, std::size_t mass);
    void add(const EventRecord& event, std::size_t system_size = 0);
    std::size_t n_events() const noexcept { return n_events_; }
    YieldHistogram result() const;

private:
    std::map<std::size_t, double> sum_, sumsq_;
    std::size_t n_events_ = 0;
};

struct PowerLawFit {
    double tau = 0.0;
    /// From the chi^2 curvature at the minimum (delta chi^2 = 1), inflated by
    /// sqrt(reduced chi^2) when that exceeds 1; NaN at a grid edge.
    double tau_se = 0.0;
    double q0 = 0.0;
    double chi2 = 0.0;
    std::size_t ndof = 0;
    FitRange fit_range;
    std::size_t n_bins = 0;
    std::size_t n_events = 0;

    double chi2_reduced() const noexcept { return ndof > 0 ? chi2 / static_cast<double>(ndof) : chi2; }
};

/// Weighted chi^2 of n_A = q0 A^-tau over the fit range at fixed tau, with q0
/// set to its weighted least-squares optimum. Empty bins are skipped; nonzero
/// bins without spread take the smallest positive error found in range.
struct Chi2Point {
    double chi2 = 0.0;
    double q0 = 0.0;
    std::size_t n_bins = 0;
};
Chi2Point chi2_at(const YieldHistogram& histogram, FitRange range, double tau);

/// Grid search over tau minimizing chi^2, refined by a parabola through the
/// minimum and its grid neighbors. Throws FitError when the range holds no
/// usable bin or every bin in range is zero.
PowerLawFit fit_tau(const YieldHistogram& histogram, FitRange range, const TauGrid& grid = {});

struct MultiplicityBin {
    std::size_t m_lo = 0;
    std::size_t m_hi = 0;
    std::size_t m_representative = 0;  ///< most populated multiplicity in the bin
    std::size_t n_events = 0;
    std::optional<PowerLawFit> fit;    ///< empty when the bin could not be fitted
};

struct CriticalMultiplicity {
    std::size_t m_c = 0;
    std::vector<MultiplicityBin> bins;
    bool degenerate = false;  ///< input held a single multiplicity bin
};

/// Groups events by multiplicity, merges neighboring multiplicities until each
/// bin holds at least `min_events`, fits each bin and picks the lowest reduced
/// chi^2. A single-bin input is returned as degenerate; otherwise fewer than
/// three fittable bins is an error.
CriticalMultiplicity critical_multiplicity(const std::vector<EventRecord>& events, const TauGrid& grid,
                                           FitRange range, std::size_t min_events = 20,
                                           std::size_t system_size = 0);

struct MomentPoint {
    double control = 0.0;
    double moment = 0.0;
    double moment_se = 0.0;
    double a_max_mean = 0.0;
    double a_max_se = 0.0;
    std::size_t n_events = 0;
};

using MomentSeries = std::vector<MomentPoint>;

/// M_k = sum_A n_A A^k per event, averaged within each group. With
/// `exclude_largest`, each event's largest fragment is left out of the sum.
/// Groups are keyed by their control value; events without one form group 0.
MomentSeries moments(const std::vector<EventRecord>& events, int k, bool exclude_largest,
                     std::size_t system_size = 0);

enum class Side { Below, Above };

struct ExponentEstimate {
    double value = 0.0;
    double error = 0.0;  ///< standard error of the log-log slope
    std::size_t n_points = 0;
    double eps_min = 0.0;
    double eps_max = 0.0;
};

struct ScalingWindow {
    Side side = Side::Below;
    double eps_min = 0.0;  ///< |eps| lower bound (inclusive)
    double eps_max = 1.0;  ///< |eps| upper bound (inclusive)
};

/// gamma from M2 ~ |eps|^-gamma, eps = (c - c_crit) / c_crit.
ExponentEstimate extract_gamma(const std::vector<std::pair<double, double>>& series, double critical_point,
                               ScalingWindow window);
/// beta from A_max ~ |eps|^beta.
ExponentEstimate extract_beta(const std::vector<std::pair<double, double>>& series, double critical_point,
                              ScalingWindow window);

/// Samples `count` sizes in [1, a_system] with probability proportional to
/// fisher_yield(A, ...); test and demo generator.
std::vector<std::size_t> sample_fisher(std::size_t count, std::size_t a_system, double tau,
                                       double surface_coeff, double temperature, double dmu, RngStream& rng);

}  // namespace critlab::fit
