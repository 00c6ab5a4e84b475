#include "critlab/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "critlab/clusters.hpp"
#include "critlab/ecra.hpp"
#include "critlab/lattice.hpp"
#include "critlab/parallel.hpp"
#include "critlab/stats.hpp"

namespace critlab::pipeline {

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return out;
}

std::vector<double> logspace(double lo, double hi, std::size_t n) {
    std::vector<double> out = linspace(std::log(lo), std::log(hi), n);
    for (double& x : out) {
        x = std::exp(x);
    }
    return out;
}

std::string join(const std::vector<double>& values) {
    return fmt::format("{}", fmt::join(values, " "));
}

MeanSe summarize(const std::vector<double>& values) {
    if (values.size() < 2) {
        return {values.empty() ? 0.0 : values.front(), 0.0};
    }
    return mean_se(values);
}

// Window bounds nudged outward so grid endpoints computed in floating point
// stay inside.
fit::ScalingWindow window(fit::Side side, double eps_min, double eps_max) {
    return {side, eps_min * (1.0 - 1e-9), eps_max * (1.0 + 1e-9)};
}

}  // namespace

Scale parse_scale(std::string_view name) {
    if (name == "smoke") {
        return Scale::Smoke;
    }
    if (name == "desk") {
        return Scale::Desk;
    }
    throw std::invalid_argument(fmt::format("unknown scale '{}' (expected smoke or desk)", name));
}

std::string_view to_string(Scale scale) noexcept {
    return scale == Scale::Smoke ? "smoke" : "desk";
}

// ---------------------------------------------------------------- percolation

PercolationPlan PercolationPlan::for_scale(Scale scale) {
    PercolationPlan plan;
    plan.eps = logspace(0.04, 0.4, 8);
    if (scale == Scale::Smoke) {
        plan.L = 16;
        plan.scan_steps = 13;
        plan.scan_samples = 60;
        plan.configs = 400;
        plan.fit_max = 16;
        plan.sweep_samples = 30;
    }
    return plan;
}

Settings PercolationPlan::settings() const {
    return {
        {"percolation.L", fmt::format("{}", L)},
        {"percolation.mode", mode == perc::Mode::Bond ? "bond" : "site"},
        {"percolation.scan_min", fmt::format("{}", scan_min)},
        {"percolation.scan_max", fmt::format("{}", scan_max)},
        {"percolation.scan_steps", fmt::format("{}", scan_steps)},
        {"percolation.scan_samples", fmt::format("{}", scan_samples)},
        {"percolation.configs", fmt::format("{}", configs)},
        {"percolation.fit_range", fmt::format("2-{}", fit_max)},
        {"percolation.eps", join(eps)},
        {"percolation.sweep_samples", fmt::format("{}", sweep_samples)},
    };
}

PercolationReport run_percolation(const PercolationPlan& plan, const RngStream& rng) {
    if (plan.eps.size() < 5) {
        throw std::invalid_argument("percolation sweep needs at least five offsets per side");
    }
    PercolationReport report;
    const std::array<std::size_t, 3> dims{plan.L, plan.L, plan.L};
    const LatticeGeometry geometry = perc::spanning_geometry(dims);
    const std::size_t n_sites = geometry.size();

    report.scan = perc::threshold_scan(dims, linspace(plan.scan_min, plan.scan_max, plan.scan_steps),
                                       plan.scan_samples, substream(rng, 0), plan.mode);
    if (!report.scan.p_c) {
        throw std::runtime_error("spanning probability never crosses 1/2 on the scan grid");
    }
    report.p_c = *report.scan.p_c;

    // Ensemble at p_c with the spanning cluster left out.
    struct ConfigSlot {
        std::map<std::size_t, std::size_t> counts;
        std::size_t mass = 0;
        bool conserved = false;
    };
    std::vector<ConfigSlot> slots(plan.configs);
    const RngStream config_root = substream(rng, 1);
    parallel_for(plan.configs, [&](std::size_t k) {
        RngStream r = substream(config_root, k);
        const perc::Config config = perc::sample_config(geometry, report.p_c, r, plan.mode);
        const ClusterPartition clusters = perc::label(config);
        const perc::PercoStats stats = perc::compute_stats(config, clusters, true);
        std::size_t covered = stats.excluded;
        for (const auto& [s, c] : stats.cluster_counts) {
            covered += s * c;
        }
        const std::size_t occupied = plan.mode == perc::Mode::Bond ? n_sites : config.open_count();
        slots[k] = {stats.cluster_counts, n_sites, covered == occupied};
    });
    fit::HistogramAccumulator accumulator;
    for (const auto& slot : slots) {
        accumulator.add(slot.counts, slot.mass);
        report.mass_violations += slot.conserved ? 0 : 1;
    }
    report.configs = plan.configs;
    report.histogram = accumulator.result();
    try {
        report.tau = fit::fit_tau(report.histogram, {2, plan.fit_max});
    } catch (const fit::FitError& e) {
        report.tau_error = e.what();
    }

    // Coupled sweep: one set of uniforms per sample, reused at every p.
    std::vector<double> ps;
    for (auto it = plan.eps.rbegin(); it != plan.eps.rend(); ++it) {
        ps.push_back(report.p_c * (1.0 - *it));
    }
    for (double e : plan.eps) {
        ps.push_back(report.p_c * (1.0 + e));
    }
    const std::size_t n_p = ps.size();
    std::vector<double> m2(plan.sweep_samples * n_p), frac(plan.sweep_samples * n_p), span(plan.sweep_samples * n_p);
    std::vector<std::size_t> violations(plan.sweep_samples, 0);
    const RngStream sweep_root = substream(rng, 2);
    parallel_for(plan.sweep_samples, [&](std::size_t k) {
        RngStream r = substream(sweep_root, k);
        const auto uniforms = perc::draw_uniforms(geometry, plan.mode, r);
        for (std::size_t i = 0; i < n_p; ++i) {
            const perc::Config config = perc::config_from_uniforms(geometry, plan.mode, ps[i], uniforms);
            const perc::PercoStats stats = perc::compute_stats(config, false);
            const std::size_t at = i * plan.sweep_samples + k;
            m2[at] = stats.second_moment;
            frac[at] = static_cast<double>(stats.largest) / static_cast<double>(n_sites);
            span[at] = stats.spanning ? 1.0 : 0.0;
            if (i > 0) {
                const std::size_t prev = at - plan.sweep_samples;
                if (span[prev] > span[at] || frac[prev] > frac[at]) {
                    ++violations[k];
                }
            }
        }
    });
    report.coupling_checks = plan.sweep_samples * (n_p - 1);
    for (std::size_t v : violations) {
        report.coupling_violations += v;
    }
    std::vector<std::pair<double, double>> below, above;
    for (std::size_t i = 0; i < n_p; ++i) {
        const auto slice = [&](const std::vector<double>& v) {
            return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(i * plan.sweep_samples),
                                       v.begin() + static_cast<std::ptrdiff_t>((i + 1) * plan.sweep_samples));
        };
        const MeanSe a = summarize(slice(m2)), b = summarize(slice(frac)), c = summarize(slice(span));
        report.sweep.push_back({ps[i], a.mean, a.se, b.mean, b.se, c.mean});
        (ps[i] < report.p_c ? below : above).emplace_back(ps[i], ps[i] < report.p_c ? a.mean : b.mean);
    }
    try {
        report.gamma = fit::extract_gamma(below, report.p_c, window(fit::Side::Below, plan.eps.front(), plan.eps.back()));
        report.beta = fit::extract_beta(above, report.p_c, window(fit::Side::Above, plan.eps.front(), plan.eps.back()));
        report.tau_relation = perc::tau_from_beta_gamma(report.beta->value, report.gamma->value);
        report.sigma = perc::sigma_from_beta_gamma(report.beta->value, report.gamma->value);
    } catch (const fit::FitError& e) {
        report.exponent_error = e.what();
    }
    return report;
}

// ------------------------------------------------------------------------ hiv

HivPhasePlan HivPhasePlan::for_scale(Scale scale) {
    HivPhasePlan plan;
    if (scale == Scale::Smoke) {
        plan.options.n = 8;
        plan.options.replicas = 5;
    }
    return plan;
}

Settings HivPhasePlan::settings() const {
    return {
        {"hiv_phase.n", fmt::format("{}", options.n)},
        {"hiv_phase.grid_steps", fmt::format("{}", options.grid_steps)},
        {"hiv_phase.replicas", fmt::format("{}", options.replicas)},
        {"hiv_phase.max_steps", fmt::format("{}", options.max_steps)},
        {"hiv_phase.initial_strains", fmt::format("{}", options.initial_strains)},
        {"hiv_phase.low_fraction", fmt::format("{}", low_fraction)},
    };
}

HivPhaseReport run_hiv_phase(const HivPhasePlan& plan, const RngStream& rng) {
    HivPhaseReport report;
    const std::size_t g = plan.options.grid_steps;
    report.grid_steps = g;
    report.cells = hiv::phase_diagram(plan.options, rng);
    for (const auto& cell : report.cells) {
        report.max_ratio = std::max(report.max_ratio, cell.infected_ratio);
    }
    const double low_cut = plan.low_fraction * report.max_ratio;
    const double high_cut = 0.5 * report.max_ratio;
    const auto low = [&](std::size_t c) { return report.cells[c].infected_ratio < low_cut; };

    // Cell (i_vs, i_is) sits at x = i_is, y = i_vs of a g x g open grid.
    const LatticeGeometry grid({g, g, 1}, Boundary::Open);
    const ClusterPartition regions =
        label_lattice(grid, [&](std::size_t a, std::size_t b) { return low(a) && low(b); }, low);
    report.low_regions = regions.cluster_count();
    std::map<std::size_t, int> ids;
    report.region.assign(report.cells.size(), -1);
    for (std::size_t c = 0; c < report.cells.size(); ++c) {
        if (regions.labels[c] != ClusterPartition::unassigned) {
            const auto [it, fresh] = ids.emplace(regions.labels[c], static_cast<int>(ids.size()));
            report.region[c] = it->second;
        }
    }
    // Two different regions joined by a straight run of cells that passes a high cell.
    const auto scan_line = [&](auto&& cell_at) {
        int last_region = -1;
        bool high_since = false;
        for (std::size_t k = 0; k < g; ++k) {
            const std::size_t c = cell_at(k);
            if (report.region[c] >= 0) {
                if (last_region >= 0 && report.region[c] != last_region && high_since) {
                    report.separated_by_high = true;
                }
                last_region = report.region[c];
                high_since = false;
            } else if (report.cells[c].infected_ratio >= high_cut) {
                high_since = true;
            }
        }
    };
    for (std::size_t row = 0; row < g; ++row) {
        scan_line([&](std::size_t k) { return row * g + k; });
        scan_line([&](std::size_t k) { return k * g + row; });
    }
    return report;
}

HivTauPlan HivTauPlan::for_scale(Scale scale) {
    HivTauPlan plan;
    if (scale == Scale::Smoke) {
        plan.n = 10;
        plan.qvs_min = 0.84;
        plan.qvs_max = 0.98;
        plan.qvs_steps = 8;
        plan.locate_runs = 60;
        plan.runs = 300;
    }
    return plan;
}

std::uint64_t HivTauPlan::step_budget() const noexcept {
    return max_steps > 0 ? max_steps : (std::uint64_t{8} << n);
}

Settings HivTauPlan::settings() const {
    return {
        {"hiv.n", fmt::format("{}", n)},
        {"hiv.q_is", fmt::format("{}", q_is)},
        {"hiv.qvs_min", fmt::format("{}", qvs_min)},
        {"hiv.qvs_max", fmt::format("{}", qvs_max)},
        {"hiv.qvs_steps", fmt::format("{}", qvs_steps)},
        {"hiv.locate_runs", fmt::format("{}", locate_runs)},
        {"hiv.runs", fmt::format("{}", runs)},
        {"hiv.max_steps", fmt::format("{}", step_budget())},
        {"hiv.initial_strains", fmt::format("{}", initial_strains)},
    };
}

namespace {

struct HivOutcome {
    std::vector<std::size_t> sizes;  // descending
    std::size_t infected = 0;
    bool conserved = true;
};

HivOutcome hiv_outcome(const HivTauPlan& plan, double q_vs, RngStream r) {
    hiv::AutomatonParams params;
    params.n = plan.n;
    params.q_vs = q_vs;
    params.q_is = plan.q_is;
    params.max_steps = plan.step_budget();
    params.initial_strains = hiv::random_strains(plan.n, plan.initial_strains, r);
    const hiv::RunResult run = hiv::run(params, r, params.max_steps);
    HivOutcome out;
    const std::size_t sites = std::size_t{1} << plan.n;
    for (const auto& point : run.trajectory) {
        out.conserved = out.conserved && point.S + point.I + point.R == sites;
    }
    out.sizes = hiv::infected_clusters(run.final_space).sizes_descending();
    out.infected = run.final_space.infected();
    return out;
}

}  // namespace

HivTauReport run_hiv_tau(const HivTauPlan& plan, const RngStream& rng) {
    HivTauReport report;
    const double sites = std::ldexp(1.0, static_cast<int>(plan.n));
    const auto grid = linspace(plan.qvs_min, plan.qvs_max, plan.qvs_steps);

    const RngStream locate_root = substream(rng, 0);
    std::vector<HivOutcome> located(grid.size() * plan.locate_runs);
    parallel_for(located.size(), [&](std::size_t j) {
        const std::size_t i = j / plan.locate_runs, r = j % plan.locate_runs;
        located[j] = hiv_outcome(plan, grid[i], substream(substream(locate_root, i), r));
    });
    std::size_t best = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::vector<double> m2(plan.locate_runs);
        double infected = 0.0;
        for (std::size_t r = 0; r < plan.locate_runs; ++r) {
            const HivOutcome& o = located[i * plan.locate_runs + r];
            double sum = 0.0;
            for (std::size_t k = 1; k < o.sizes.size(); ++k) {
                sum += static_cast<double>(o.sizes[k]) * static_cast<double>(o.sizes[k]);
            }
            m2[r] = sum / sites;
            infected += static_cast<double>(o.infected) / sites;
            report.conservation_violations += o.conserved ? 0 : 1;
        }
        const MeanSe s = summarize(m2);
        report.locator.push_back({grid[i], s.mean, s.se, infected / static_cast<double>(plan.locate_runs)});
        if (s.mean > report.locator[best].m2) {
            best = i;
        }
    }
    report.q_vs = grid[best];

    const RngStream tau_root = substream(rng, 1);
    std::vector<HivOutcome> outcomes(plan.runs);
    parallel_for(plan.runs, [&](std::size_t r) { outcomes[r] = hiv_outcome(plan, report.q_vs, substream(tau_root, r)); });
    for (auto& o : outcomes) {
        report.conservation_violations += o.conserved ? 0 : 1;
        report.events.push_back({std::move(o.sizes), report.q_vs});
    }
    const std::size_t n_sites = std::size_t{1} << plan.n;
    try {
        report.tau = fit::fit_tau(fit::build_histogram(report.events, n_sites), fit::default_fit_range(n_sites));
    } catch (const fit::FitError& e) {
        report.tau_error = e.what();
    }
    return report;
}

// ------------------------------------------------------------------------ cmr

CmrPlan CmrPlan::for_scale(Scale scale) {
    CmrPlan plan;
    if (scale == Scale::Smoke) {
        plan.L = 8;
        plan.t_steps = 17;
        plan.scan.sweeps_discard = 300;
        plan.scan.sweeps_measure = 2000;
        plan.chains = 2;
        plan.measurements_per_chain = 100;
    }
    return plan;
}

std::vector<double> CmrPlan::temperatures() const {
    return linspace(t_min, t_max, t_steps);
}

Settings CmrPlan::settings() const {
    return {
        {"cmr.L", fmt::format("{}", L)},
        {"cmr.J", fmt::format("{}", scan.J)},
        {"cmr.h", fmt::format("{}", scan.h)},
        {"cmr.t_min", fmt::format("{}", t_min)},
        {"cmr.t_max", fmt::format("{}", t_max)},
        {"cmr.t_steps", fmt::format("{}", t_steps)},
        {"cmr.discard", fmt::format("{}", scan.sweeps_discard)},
        {"cmr.measure", fmt::format("{}", scan.sweeps_measure)},
        {"cmr.blocks", fmt::format("{}", scan.blocks)},
        {"cmr.domain_stride", fmt::format("{}", scan.domain_stride)},
        {"cmr.chains", fmt::format("{}", chains)},
        {"cmr.measurements_per_chain", fmt::format("{}", measurements_per_chain)},
        {"cmr.measurement_stride", fmt::format("{}", measurement_stride)},
    };
}

CmrReport run_cmr(const CmrPlan& plan, const RngStream& rng) {
    CmrReport report;
    const LatticeGeometry geometry = LatticeGeometry::cube(plan.L, Boundary::Periodic);
    const auto temps = plan.temperatures();
    report.scan = spin::susceptibility_scan(geometry, temps, plan.scan, substream(rng, 0));
    const auto& samples = report.scan.samples;

    const auto exceeds = [&](std::size_t i, std::size_t j) {
        const double se = std::hypot(samples[i].susceptibility_se, samples[j].susceptibility_se);
        return samples[i].susceptibility - samples[j].susceptibility > 2.0 * se;
    };
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const bool left = i == 0 || exceeds(i, i - 1);
        const bool right = i + 1 == samples.size() || exceeds(i, i + 1);
        if (left && right) {
            report.significant_maxima.push_back(i);
        }
    }
    report.single_interior_peak = report.significant_maxima.size() == 1 &&
                                  report.significant_maxima.front() == report.scan.peak_index &&
                                  report.scan.peak_index > 0 && report.scan.peak_index + 1 < samples.size();

    // Domain snapshots at the peak temperature.
    const double t_c = report.scan.t_c;
    const RngStream chain_root = substream(rng, 1);
    std::vector<std::vector<fit::EventRecord>> chains(plan.chains);
    parallel_for(plan.chains, [&](std::size_t c) {
        RngStream r = substream(chain_root, c);
        spin::SpinLattice s = spin::make_lattice(geometry, plan.scan.J, plan.scan.h, t_c, plan.scan.start, r);
        const spin::HeatBath bath(s);
        for (std::size_t k = 0; k < plan.scan.sweeps_discard; ++k) {
            bath.sweep(s, r);
        }
        for (std::size_t m = 0; m < plan.measurements_per_chain; ++m) {
            for (std::size_t k = 0; k < plan.measurement_stride; ++k) {
                bath.sweep(s, r);
            }
            chains[c].push_back({spin::domain_clusters(s).sizes_descending(), t_c});
        }
    });
    for (auto& chain : chains) {
        for (auto& e : chain) {
            report.events.push_back(std::move(e));
        }
    }
    const std::size_t n_sites = geometry.size();
    try {
        report.tau = fit::fit_tau(fit::build_histogram(report.events, n_sites), fit::default_fit_range(n_sites));
    } catch (const fit::FitError& e) {
        report.tau_error = e.what();
    }

    // Ordered side: the decade of eps starting at the grid point nearest T_c.
    std::vector<std::pair<double, double>> ordered;
    double eps_min = 0.0;
    for (const auto& sample : samples) {
        if (sample.T < t_c && sample.largest_domain_fraction > 0.0) {
            ordered.emplace_back(sample.T, sample.largest_domain_fraction);
            const double eps = (t_c - sample.T) / t_c;
            eps_min = eps_min == 0.0 ? eps : std::min(eps_min, eps);
        }
    }
    try {
        if (eps_min == 0.0) {
            throw fit::FitError("no ordered-side temperatures with domain measurements");
        }
        report.beta = fit::extract_beta(ordered, t_c, window(fit::Side::Below, eps_min, 10.0 * eps_min));
    } catch (const fit::FitError& e) {
        report.beta_error = e.what();
    }
    return report;
}

// ------------------------------------------------------------------------- md

MdPlan MdPlan::for_scale(Scale scale) {
    MdPlan plan;
    if (scale == Scale::Smoke) {
        plan.events = 10;
        plan.collision.t_end = 12.0;
    }
    return plan;
}

Settings MdPlan::settings() const {
    return {
        {"md.projectile", fmt::format("{}", projectile)},
        {"md.target", fmt::format("{}", target)},
        {"md.binding", fmt::format("{}", binding)},
        {"md.beam_energy", fmt::format("{}", beam_energy)},
        {"md.impact_max", fmt::format("{}", impact_max)},
        {"md.dt", fmt::format("{}", collision.dt)},
        {"md.t_end", fmt::format("{}", collision.t_end)},
        {"md.max_drift", fmt::format("{}", collision.max_drift)},
        {"md.gap", fmt::format("{}", collision.gap)},
        {"md.events", fmt::format("{}", events)},
        {"md.slope_range", fmt::format("{}-{}", slope_min, slope_max)},
    };
}

std::optional<BinnedSlope> log_binned_slope(const std::map<std::size_t, std::size_t>& counts, std::size_t a_min,
                                            std::size_t a_max) {
    std::vector<double> x, y;
    for (std::size_t lo = a_min; lo <= a_max;) {
        const std::size_t hi = std::min(a_max + 1, std::max(lo + 1, lo * 3 / 2));
        double total = 0.0;
        for (auto it = counts.lower_bound(lo); it != counts.end() && it->first < hi; ++it) {
            total += static_cast<double>(it->second);
        }
        if (total > 0.0) {
            const double width = static_cast<double>(hi - lo);
            x.push_back(0.5 * std::log(static_cast<double>(lo) * static_cast<double>(hi - 1)));
            y.push_back(std::log(total / width));
        }
        lo = hi;
    }
    if (x.size() < 3) {
        return std::nullopt;
    }
    const LineFit line = fit_line(x, y);
    return BinnedSlope{-line.slope, line.slope_se, x.size()};
}

MdReport run_md(const MdPlan& plan, const RngStream& rng) {
    MdReport report;
    const md::PairPotential potential;
    struct Slot {
        std::optional<fit::EventRecord> event;
        double drift = 0.0;
        double momentum = 0.0;
    };
    std::vector<Slot> slots(plan.events);
    parallel_for(plan.events, [&](std::size_t e) {
        RngStream r = substream(rng, e);
        const md::Droplet a = md::prepare_droplet(plan.projectile, plan.binding, potential, r);
        const md::Droplet b = md::prepare_droplet(plan.target, plan.binding, potential, r);
        const double impact = plan.impact_max * r.uniform();
        md::CollisionResult result;
        try {
            result = md::collide(a.system, b.system, plan.beam_energy, impact, potential, plan.collision);
        } catch (const md::EnergyDriftError& err) {
            slots[e].drift = err.drift;
            return;
        }
        const md::ParticleSystem& final_frame = result.snapshots.back().system;
        const ecra::FragmentPartition partition = ecra::anneal(
            final_frame, potential, ecra::AnnealSchedule::defaults_for(final_frame, potential), substream(r, 1));
        slots[e] = {ecra::fragment_sizes(partition, plan.beam_energy), result.max_drift,
                    md::norm(final_frame.momentum())};
    });
    for (auto& slot : slots) {
        if (!slot.event) {
            ++report.rejected;
            continue;
        }
        report.max_drift = std::max(report.max_drift, slot.drift);
        report.max_momentum = std::max(report.max_momentum, slot.momentum);
        for (std::size_t s : slot.event->fragment_sizes) {
            ++report.fragment_counts[s];
        }
        report.events.push_back(std::move(*slot.event));
    }
    if (const auto slope = log_binned_slope(report.fragment_counts, plan.slope_min, plan.slope_max)) {
        report.slope = slope->value;
        report.slope_se = slope->se;
        report.slope_bins = slope->bins;
    }

    const std::size_t total = plan.projectile + plan.target;
    const fit::FitRange range{plan.slope_min, plan.slope_max};
    try {
        if (report.events.empty()) {
            throw fit::FitError("no accepted collision events");
        }
        try {
            const auto crit = fit::critical_multiplicity(report.events, {}, range, 20, total);
            if (crit.degenerate) {
                throw fit::FitError("single multiplicity bin");
            }
            for (const auto& bin : crit.bins) {
                if (bin.fit && bin.m_representative == crit.m_c) {
                    report.tau = bin.fit;
                    report.regime = fmt::format("E={} m_c={}", plan.beam_energy, crit.m_c);
                }
            }
        } catch (const fit::FitError&) {
            report.tau = fit::fit_tau(fit::build_histogram(report.events, total), range);
            report.regime = fmt::format("E={} all events", plan.beam_energy);
        }
    } catch (const fit::FitError& e) {
        report.tau_error = e.what();
    }
    return report;
}

// --------------------------------------------------------------------- table1

Table1 table1(Scale scale, const RngStream& rng) {
    Table1 table;
    table.settings.emplace_back("scale", std::string(to_string(scale)));

    const auto attempt = [&](std::string system, std::string reference, auto&& body) {
        Table1Row row;
        row.system = std::move(system);
        row.reference = std::move(reference);
        try {
            body(row);
            row.status = row.tau ? "ok" : row.status;
        } catch (const std::exception& e) {
            row.status = e.what();
        }
        if (row.status.empty()) {
            row.status = "no fit";
        }
        table.rows.push_back(std::move(row));
    };
    const auto take = [](Table1Row& row, const std::optional<fit::PowerLawFit>& fit, const std::string& error) {
        if (fit) {
            row.tau = fit->tau;
            row.stderr_tau = fit->tau_se;
            row.fit_range = fit->fit_range;
            row.n_events = fit->n_events;
        } else {
            row.status = error;
        }
    };

    const HivTauPlan hiv_plan = HivTauPlan::for_scale(scale);
    const CmrPlan cmr_plan = CmrPlan::for_scale(scale);
    const MdPlan md_plan = MdPlan::for_scale(scale);
    const PercolationPlan perc_plan = PercolationPlan::for_scale(scale);
    for (const Settings& s : {hiv_plan.settings(), cmr_plan.settings(), md_plan.settings(), perc_plan.settings()}) {
        table.settings.insert(table.settings.end(), s.begin(), s.end());
    }

    attempt("HIV Cellular Automaton", "2.32", [&](Table1Row& row) {
        const HivTauReport r = run_hiv_tau(hiv_plan, substream(rng, 0));
        row.regime = fmt::format("q_vs={:.4g} q_is={}", r.q_vs, hiv_plan.q_is);
        take(row, r.tau, r.tau_error);
    });
    attempt("Colossal Magnetoresistance", "2.38", [&](Table1Row& row) {
        const CmrReport r = run_cmr(cmr_plan, substream(rng, 1));
        row.regime = fmt::format("T={:.4g}", r.scan.t_c);
        take(row, r.tau, r.tau_error);
    });
    attempt("3-D MD Collision Simulations", "2.18", [&](Table1Row& row) {
        const MdReport r = run_md(md_plan, substream(rng, 2));
        row.regime = r.regime;
        take(row, r.tau, r.tau_error);
    });
    attempt("Cubic Lattice Percolation", "2.32 ± 0.02", [&](Table1Row& row) {
        const PercolationReport r = run_percolation(perc_plan, substream(rng, 3));
        row.regime = fmt::format("p={:.5f}", r.p_c);
        take(row, r.tau, r.tau_error);
    });
    return table;
}

}  // namespace critlab::pipeline
