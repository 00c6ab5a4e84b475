#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "critlab/exponents.hpp"
#include "critlab/md.hpp"
#include "critlab/rng.hpp"

namespace critlab::ecra {

using Assignment = std::vector<std::size_t>;

/// Relabels clusters 0, 1, 2, ... in order of first appearance.
Assignment canonical(const Assignment& assignment);

struct EnergyBreakdown {
    double total = 0.0;
    std::vector<double> per_cluster;  ///< indexed by canonical cluster id
};

/// Sum over clusters of center-of-mass-frame kinetic energy plus the pair
/// potential between members (each pair once). Cluster ids in the result are
/// canonical.
EnergyBreakdown internal_energy(const md::ParticleSystem& system, const Assignment& assignment,
                                const md::PairPotential& potential);

struct FragmentPartition {
    Assignment assignment;  ///< canonical
    double internal_energy = 0.0;
    std::vector<double> per_cluster_energy;

    std::size_t cluster_count() const noexcept { return per_cluster_energy.size(); }
    std::vector<std::size_t> cluster_sizes() const;
};

/// Builds a partition with exactly recomputed energies.
FragmentPartition evaluate(const md::ParticleSystem& system, const Assignment& assignment,
                           const md::PairPotential& potential);

struct AnnealSchedule {
    double t_start = 1.0;
    double t_end = 1e-3;
    double cooling_factor = 0.95;
    std::size_t moves_per_temperature = 50;
    std::size_t restarts = 4;

    /// t_start = mean |pair energy| over interacting pairs (mean kinetic energy
    /// per particle, or 1, when no pair interacts), t_end = 1e-3 t_start,
    /// 50 n moves per temperature.
    static AnnealSchedule defaults_for(const md::ParticleSystem& system, const md::PairPotential& potential);
    void validate() const;
};

struct AnnealTrace {
    /// Best energy found so far, one entry per temperature level and restart
    /// (restarts concatenated).
    std::vector<double> best_energy;
};

/// Metropolis annealing over set partitions with single-particle moves (to
/// another existing cluster or to a new singleton). Restart r runs on
/// substream(rng, r); the winner is the lowest energy among all restarts and
/// the all-singletons and single-cluster partitions, ties going to the
/// lexicographically smallest canonical assignment.
FragmentPartition anneal(const md::ParticleSystem& system, const md::PairPotential& potential,
                         const AnnealSchedule& schedule, const RngStream& rng, AnnealTrace* trace = nullptr);

inline constexpr std::size_t enumeration_limit = 12;

/// Exact minimum by enumerating all set partitions (restricted growth strings
/// in lexicographic order). Throws std::invalid_argument above
/// enumeration_limit particles.
FragmentPartition enumerate_partitions_min(const md::ParticleSystem& system, const md::PairPotential& potential,
                                           std::size_t* evaluated = nullptr);

/// Fragment sizes sorted descending.
fit::EventRecord fragment_sizes(const FragmentPartition& partition, std::optional<double> control = std::nullopt);

}  // namespace critlab::ecra
