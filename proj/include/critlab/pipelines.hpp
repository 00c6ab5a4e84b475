#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "critlab/exponents.hpp"
#include "critlab/hiv.hpp"
#include "critlab/md.hpp"
#include "critlab/percolation.hpp"
#include "critlab/rng.hpp"
#include "critlab/spin.hpp"

// End-to-end pipelines: each simulator run at a fixed scale, its critical
// regime located and tau fitted. Shared by the table1 command and the
// acceptance suite.
namespace critlab::pipeline {

enum class Scale { Smoke, Desk };

/// Throws std::invalid_argument for anything but "smoke" or "desk".
Scale parse_scale(std::string_view name);
std::string_view to_string(Scale scale) noexcept;

/// Flat `key = value` parameter list, in insertion order.
using Settings = std::vector<std::pair<std::string, std::string>>;

// ---------------------------------------------------------------- percolation

struct PercolationPlan {
    std::size_t L = 32;
    perc::Mode mode = perc::Mode::Bond;
    double scan_min = 0.22, scan_max = 0.28;
    std::size_t scan_steps = 25;
    std::size_t scan_samples = 200;
    std::size_t configs = 2000;           ///< at p_c, spanning cluster excluded
    std::size_t fit_max = 32;             ///< tau fit over [2, fit_max]
    std::vector<double> eps;              ///< sweep offsets, p = p_c (1 +- eps)
    std::size_t sweep_samples = 100;

    static PercolationPlan for_scale(Scale scale);
    Settings settings() const;
};

struct SweepPoint {
    double p = 0.0;
    double second_moment = 0.0, second_moment_se = 0.0;      ///< all clusters
    double largest_fraction = 0.0, largest_fraction_se = 0.0;
    double spanning_prob = 0.0;
};

struct PercolationReport {
    perc::ThresholdScan scan;
    double p_c = 0.0;
    fit::YieldHistogram histogram;
    std::optional<fit::PowerLawFit> tau;
    std::string tau_error;
    std::size_t configs = 0;
    std::size_t mass_violations = 0;
    std::size_t coupling_checks = 0;
    std::size_t coupling_violations = 0;
    std::vector<SweepPoint> sweep;  ///< ascending p
    std::optional<fit::ExponentEstimate> gamma, beta;
    std::string exponent_error;
    std::optional<double> tau_relation;  ///< 2 + beta / (beta + gamma)
    std::optional<double> sigma;         ///< 1 / (beta + gamma)
};

/// Threshold scan for p_c, tau fit at p_c, then a coupled sweep around p_c
/// for gamma (M2 below p_c) and beta (largest-cluster fraction above).
/// Throws std::runtime_error when the scan never crosses 1/2.
PercolationReport run_percolation(const PercolationPlan& plan, const RngStream& rng);

// ------------------------------------------------------------------------ hiv

struct HivPhasePlan {
    hiv::PhaseOptions options;
    double low_fraction = 0.25;  ///< low cells are below this fraction of the maximum

    static HivPhasePlan for_scale(Scale scale);
    Settings settings() const;
};

struct HivPhaseReport {
    std::vector<hiv::PhaseCell> cells;  ///< q_vs-major
    std::size_t grid_steps = 0;
    double max_ratio = 0.0;
    /// Region id per cell (4-neighbor connected low cells), -1 for other cells.
    std::vector<int> region;
    std::size_t low_regions = 0;
    /// Whether some pair of low regions is separated along a grid row or
    /// column by cells at or above the grid mean.
    bool separated_by_high = false;
};

HivPhaseReport run_hiv_phase(const HivPhasePlan& plan, const RngStream& rng);

struct HivTauPlan {
    unsigned n = 12;
    double q_is = 0.5;
    double qvs_min = 0.80, qvs_max = 0.99;
    std::size_t qvs_steps = 20;
    std::size_t locate_runs = 200;
    std::size_t runs = 1000;
    std::uint64_t max_steps = 0;  ///< 0 means 8 * 2^n
    std::size_t initial_strains = 1;

    static HivTauPlan for_scale(Scale scale);
    Settings settings() const;
    std::uint64_t step_budget() const noexcept;
};

struct HivLocatorPoint {
    double q_vs = 0.0;
    double m2 = 0.0, m2_se = 0.0;  ///< largest cluster excluded, per site
    double infected_ratio = 0.0;
};

struct HivTauReport {
    std::vector<HivLocatorPoint> locator;
    double q_vs = 0.0;  ///< second-moment maximum
    std::vector<fit::EventRecord> events;
    std::optional<fit::PowerLawFit> tau;
    std::string tau_error;
    std::size_t conservation_violations = 0;  ///< S + I + R != 2^n anywhere
};

/// Locates the q_vs maximizing M2 of the final infected clusters, then fits
/// tau on a fresh ensemble there.
HivTauReport run_hiv_tau(const HivTauPlan& plan, const RngStream& rng);

// ------------------------------------------------------------------------ cmr

struct CmrPlan {
    std::size_t L = 12;
    double t_min = 2.0, t_max = 6.0;
    std::size_t t_steps = 21;
    spin::ScanOptions scan{1.0, 0.0, 1000, 10000, 20, spin::Start::Aligned, 10};
    std::size_t chains = 4;                  ///< independent chains at T_c
    std::size_t measurements_per_chain = 250;
    std::size_t measurement_stride = 10;     ///< sweeps between cluster snapshots

    static CmrPlan for_scale(Scale scale);
    Settings settings() const;
    std::vector<double> temperatures() const;
};

struct CmrReport {
    spin::SusceptibilityScan scan;
    /// Local maxima of chi exceeding both neighbors by more than two combined
    /// standard errors.
    std::vector<std::size_t> significant_maxima;
    bool single_interior_peak = false;
    std::vector<fit::EventRecord> events;
    std::optional<fit::PowerLawFit> tau;
    std::string tau_error;
    std::optional<fit::ExponentEstimate> beta;
    std::string beta_error;
};

/// Susceptibility scan, domain-size tau at the peak, beta from the largest
/// domain fraction over the decade of eps nearest the peak on the ordered side.
CmrReport run_cmr(const CmrPlan& plan, const RngStream& rng);

// ------------------------------------------------------------------------- md

struct MdPlan {
    std::size_t projectile = 64, target = 64;
    double binding = -3.0;          ///< droplet energy per particle at most this
    double beam_energy = 25.0;      ///< lab kinetic energy per projectile particle
    double impact_max = 0.5;        ///< impact parameter uniform in [0, impact_max]
    md::CollisionOptions collision{0.0005, 20.0, 1000000, 1e-4, 0.5};
    std::size_t events = 40;
    std::size_t slope_min = 2, slope_max = 16;

    static MdPlan for_scale(Scale scale);
    Settings settings() const;
};

struct MdReport {
    std::vector<fit::EventRecord> events;  ///< ECRA fragment sizes of accepted runs
    std::size_t rejected = 0;              ///< runs dropped for energy drift
    double max_drift = 0.0;
    double max_momentum = 0.0;             ///< largest final |P| over accepted runs
    std::map<std::size_t, std::size_t> fragment_counts;
    std::optional<double> slope;           ///< -d log(count density) / d log A
    double slope_se = 0.0;
    std::size_t slope_bins = 0;
    std::optional<fit::PowerLawFit> tau;
    std::string tau_error;
    std::string regime;
};

struct BinnedSlope {
    double value = 0.0;
    double se = 0.0;
    std::size_t bins = 0;
};

/// Fragment-count density in logarithmic size bins over [a_min, a_max]
/// (bin [lo, hi) with hi = max(lo + 1, floor(1.5 lo))) fitted by a line in
/// log-log coordinates at the bins' geometric centers; returns minus the
/// slope. Empty when fewer than three bins are nonempty.
std::optional<BinnedSlope> log_binned_slope(const std::map<std::size_t, std::size_t>& counts,
                                              std::size_t a_min, std::size_t a_max);

/// Droplet pairs collided, final frames partitioned by ECRA.
MdReport run_md(const MdPlan& plan, const RngStream& rng);

// --------------------------------------------------------------------- table1

struct Table1Row {
    std::string system;
    std::string reference;
    std::optional<double> tau;
    double stderr_tau = 0.0;
    std::string regime;
    fit::FitRange fit_range;
    std::size_t n_events = 0;
    std::string status;  ///< "ok" or the failure message
};

struct Table1 {
    std::vector<Table1Row> rows;
    Settings settings;
};

/// Rows in fixed order: HIV, CMR, MD, percolation. Row r runs on
/// substream(rng, r); a failing row is reported without stopping the others.
Table1 table1(Scale scale, const RngStream& rng);

}  // namespace critlab::pipeline
