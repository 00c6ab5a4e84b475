#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "critlab/clusters.hpp"
#include "critlab/lattice.hpp"
#include "critlab/rng.hpp"

namespace critlab::spin {

using Spin = std::int8_t;

/// Spin-1 lattice, S in {-1, 0, +1}, with H = -J sum_<ij> S_i S_j - h sum_i S_i.
/// Energies and temperature share units; Boltzmann's constant is 1.
struct SpinLattice {
    Lattice3D<Spin> lattice;
    double J = 1.0;
    double h = 0.0;
    double T = 1.0;

    std::size_t size() const noexcept { return lattice.size(); }
};

enum class Start { Aligned, Random, Zero };

SpinLattice make_lattice(const LatticeGeometry& geometry, double J, double h, double T, Start start,
                         RngStream& rng);

/// Nearest-neighbor pairs counted once.
double total_energy(const SpinLattice& s);
/// Sum of spins.
long magnetization(const SpinLattice& s);

/// Energy change of setting `site` to `new_spin`.
double delta_energy(const SpinLattice& s, std::size_t site, Spin new_spin);

/// Heat-bath acceptance e^(-dH/T) / (1 + e^(-dH/T)), evaluated without overflow.
double acceptance_probability(double delta_h, double temperature) noexcept;

struct HeatBathOptions {
    /// Reverse the mapping from random bit to candidate spin. Running
    /// (h, spins) and (-h, -spins) with opposite settings on the same stream
    /// gives negated trajectories.
    bool mirror_candidates = false;
};

/// Single-site update engine with cached neighbor table and acceptance table.
/// The lattice's J, h and T are read at construction.
class HeatBath {
public:
    explicit HeatBath(const SpinLattice& s, HeatBathOptions options = {});

    /// Picks a uniform site and one of the two other spin values uniformly,
    /// accepts with acceptance_probability(dH, T).
    bool step(SpinLattice& s, RngStream& rng) const;

    /// N = lattice size steps; returns the accepted fraction.
    double sweep(SpinLattice& s, RngStream& rng) const;

    double local_field(const SpinLattice& s, std::size_t site) const noexcept;

private:
    NeighborTable neighbors_;
    HeatBathOptions options_;
    double J_, h_, T_;
    int max_degree_;
    // acceptance_[(change + 2) * (2 * max_degree_ + 1) + (sum + max_degree_)]
    std::vector<double> acceptance_;
};

bool heat_bath_step(SpinLattice& s, RngStream& rng);
double sweep(SpinLattice& s, RngStream& rng);

struct ThermoSample {
    double T = 0.0;
    double mean_magnetization = 0.0;  ///< <M>/N
    double mean_magnetization_se = 0.0;
    double susceptibility = 0.0;  ///< (<M^2> - <M>^2) / (N T)
    double susceptibility_se = 0.0;
    double energy_per_site = 0.0;
    double acceptance_rate = 0.0;
    double largest_domain_fraction = 0.0;
    double largest_domain_fraction_se = 0.0;
    std::size_t n_sweeps_measured = 0;
    std::size_t n_sweeps_discarded = 0;
};

struct ScanOptions {
    double J = 1.0;
    double h = 0.0;
    std::size_t sweeps_discard = 1000;
    std::size_t sweeps_measure = 10000;
    std::size_t blocks = 20;
    Start start = Start::Aligned;
    /// Sweeps between largest-domain measurements; 0 disables them.
    std::size_t domain_stride = 0;
};

/// One equilibrated run at temperature T; rng is used as given.
ThermoSample measure(const LatticeGeometry& geometry, double T, const ScanOptions& options, RngStream& rng);

struct SusceptibilityScan {
    std::vector<ThermoSample> samples;
    double t_c = 0.0;  ///< grid temperature of the susceptibility maximum
    std::size_t peak_index = 0;
};

/// Temperature point i runs on substream(rng, i).
SusceptibilityScan susceptibility_scan(const LatticeGeometry& geometry, const std::vector<double>& t_grid,
                                       const ScanOptions& options, const RngStream& rng);

/// Maximal nearest-neighbor sets of equal nonzero spin; zero spins are unassigned.
ClusterPartition domain_clusters(const SpinLattice& s);

}  // namespace critlab::spin
