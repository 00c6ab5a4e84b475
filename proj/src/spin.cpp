#include "critlab/spin.hpp"

#include <cmath>
#include <stdexcept>

#include "critlab/parallel.hpp"
#include "critlab/stats.hpp"

namespace critlab::spin {

SpinLattice make_lattice(const LatticeGeometry& geometry, double J, double h, double T, Start start,
                         RngStream& rng) {
    SpinLattice s{Lattice3D<Spin>(geometry, Spin{0}), J, h, T};
    for (auto& v : s.lattice.sites()) {
        switch (start) {
            case Start::Aligned: v = 1; break;
            case Start::Zero: v = 0; break;
            case Start::Random: v = static_cast<Spin>(static_cast<int>(rng.below(3)) - 1); break;
        }
    }
    return s;
}

double total_energy(const SpinLattice& s) {
    const auto& g = s.lattice.geometry();
    long bonds = 0;
    long field = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const int si = s.lattice[i];
        field += si;
        for (int axis = 0; axis < 3; ++axis) {
            if (auto j = g.forward(i, axis)) {
                bonds += si * s.lattice[*j];
            }
        }
    }
    return -s.J * static_cast<double>(bonds) - s.h * static_cast<double>(field);
}

long magnetization(const SpinLattice& s) {
    long m = 0;
    for (auto v : s.lattice.sites()) {
        m += v;
    }
    return m;
}

double delta_energy(const SpinLattice& s, std::size_t site, Spin new_spin) {
    if (new_spin < -1 || new_spin > 1) {
        throw std::invalid_argument("spin values are -1, 0 or +1");
    }
    long sum = 0;
    for (std::size_t j : s.lattice.neighbors(site)) {
        sum += s.lattice[j];
    }
    const int change = new_spin - s.lattice[site];
    return static_cast<double>(change) * (-s.J * static_cast<double>(sum) - s.h);
}

double acceptance_probability(double delta_h, double temperature) noexcept {
    const double x = delta_h / temperature;
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return e / (1.0 + e);
    }
    return 1.0 - acceptance_probability(-delta_h, temperature);
}

HeatBath::HeatBath(const SpinLattice& s, HeatBathOptions options)
    : neighbors_(s.lattice.geometry()), options_(options), J_(s.J), h_(s.h), T_(s.T), max_degree_(6) {
    if (!(T_ > 0.0)) {
        throw std::invalid_argument("heat-bath dynamics needs T > 0");
    }
    const int width = 2 * max_degree_ + 1;
    acceptance_.assign(5 * width, 0.0);
    for (int change = -2; change <= 2; ++change) {
        for (int sum = -max_degree_; sum <= max_degree_; ++sum) {
            const double dh = change * (-J_ * sum - h_);
            acceptance_[(change + 2) * width + (sum + max_degree_)] = acceptance_probability(dh, T_);
        }
    }
}

double HeatBath::local_field(const SpinLattice& s, std::size_t site) const noexcept {
    long sum = 0;
    for (std::size_t j : neighbors_[site]) {
        sum += s.lattice[j];
    }
    return -J_ * static_cast<double>(sum) - h_;
}

bool HeatBath::step(SpinLattice& s, RngStream& rng) const {
    const std::size_t site = rng.below(s.size());
    const Spin old = s.lattice[site];
    // The two other values in ascending order.
    const Spin candidates[3][2] = {{0, 1}, {-1, 1}, {-1, 0}};
    std::uint64_t bit = rng.below(2);
    if (options_.mirror_candidates) {
        bit ^= 1;
    }
    const Spin proposal = candidates[old + 1][bit];
    int sum = 0;
    for (std::size_t j : neighbors_[site]) {
        sum += s.lattice[j];
    }
    const int width = 2 * max_degree_ + 1;
    const double p = acceptance_[(proposal - old + 2) * width + (sum + max_degree_)];
    if (rng.uniform() < p) {
        s.lattice[site] = proposal;
        return true;
    }
    return false;
}

double HeatBath::sweep(SpinLattice& s, RngStream& rng) const {
    const std::size_t n = s.size();
    std::size_t accepted = 0;
    for (std::size_t i = 0; i < n; ++i) {
        accepted += step(s, rng) ? 1 : 0;
    }
    return static_cast<double>(accepted) / static_cast<double>(n);
}

bool heat_bath_step(SpinLattice& s, RngStream& rng) { return HeatBath(s).step(s, rng); }

double sweep(SpinLattice& s, RngStream& rng) { return HeatBath(s).sweep(s, rng); }

ThermoSample measure(const LatticeGeometry& geometry, double T, const ScanOptions& options, RngStream& rng) {
    if (!(T > 0.0)) {
        throw std::invalid_argument("temperatures must be positive");
    }
    SpinLattice s = make_lattice(geometry, options.J, options.h, T, options.start, rng);
    const HeatBath engine(s);
    for (std::size_t k = 0; k < options.sweeps_discard; ++k) {
        engine.sweep(s, rng);
    }
    const auto n = static_cast<double>(s.size());
    std::vector<double> m_series;
    m_series.reserve(options.sweeps_measure);
    std::vector<double> domain_series;
    double energy = 0.0;
    double accepted = 0.0;
    for (std::size_t k = 0; k < options.sweeps_measure; ++k) {
        accepted += engine.sweep(s, rng);
        m_series.push_back(static_cast<double>(magnetization(s)));
        energy += total_energy(s);
        if (options.domain_stride > 0 && (k + 1) % options.domain_stride == 0) {
            domain_series.push_back(static_cast<double>(domain_clusters(s).largest().size) / n);
        }
    }

    ThermoSample out;
    out.T = T;
    out.n_sweeps_discarded = options.sweeps_discard;
    out.n_sweeps_measured = options.sweeps_measure;
    if (m_series.empty()) {
        return out;
    }
    const auto count = static_cast<double>(m_series.size());
    double sum = 0.0, sumsq = 0.0;
    for (double m : m_series) {
        sum += m;
        sumsq += m * m;
    }
    const double mean = sum / count;
    out.mean_magnetization = mean / n;
    out.susceptibility = std::max(0.0, sumsq / count - mean * mean) / (n * T);
    out.energy_per_site = energy / count / n;
    out.acceptance_rate = accepted / count;

    std::vector<double> per_site(m_series.size());
    for (std::size_t i = 0; i < m_series.size(); ++i) {
        per_site[i] = m_series[i] / n;
    }
    out.mean_magnetization_se = blocked_mean_se(per_site, options.blocks).se;
    if (options.blocks >= 2 && m_series.size() >= options.blocks) {
        const std::size_t block = m_series.size() / options.blocks;
        std::vector<double> chis;
        for (std::size_t b = 0; b < options.blocks; ++b) {
            double bs = 0.0, bq = 0.0;
            for (std::size_t i = 0; i < block; ++i) {
                const double m = m_series[b * block + i];
                bs += m;
                bq += m * m;
            }
            const double bm = bs / static_cast<double>(block);
            chis.push_back(std::max(0.0, bq / static_cast<double>(block) - bm * bm) / (n * T));
        }
        out.susceptibility_se = mean_se(chis).se;
    }
    if (!domain_series.empty()) {
        const auto d = blocked_mean_se(domain_series, std::min(options.blocks, domain_series.size()));
        out.largest_domain_fraction = d.mean;
        out.largest_domain_fraction_se = d.se;
    }
    return out;
}

SusceptibilityScan susceptibility_scan(const LatticeGeometry& geometry, const std::vector<double>& t_grid,
                                       const ScanOptions& options, const RngStream& rng) {
    if (t_grid.empty()) {
        throw std::invalid_argument("temperature grid is empty");
    }
    SusceptibilityScan scan;
    scan.samples.resize(t_grid.size());
    parallel_for(t_grid.size(), [&](std::size_t i) {
        RngStream stream = substream(rng, i);
        scan.samples[i] = measure(geometry, t_grid[i], options, stream);
    });
    for (std::size_t i = 1; i < scan.samples.size(); ++i) {
        if (scan.samples[i].susceptibility > scan.samples[scan.peak_index].susceptibility) {
            scan.peak_index = i;
        }
    }
    scan.t_c = scan.samples[scan.peak_index].T;
    return scan;
}

ClusterPartition domain_clusters(const SpinLattice& s) {
    const auto& sites = s.lattice.sites();
    return label_lattice(
        s.lattice.geometry(), [&](std::size_t i, std::size_t j) { return sites[i] == sites[j]; },
        [&](std::size_t i) { return sites[i] != 0; });
}

}  // namespace critlab::spin
