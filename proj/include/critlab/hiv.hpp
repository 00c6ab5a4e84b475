#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "critlab/clusters.hpp"
#include "critlab/rng.hpp"

namespace critlab::hiv {

enum class SiteState : std::uint8_t { Susceptible = 0, Infected = 1, Recovered = 2 };

enum class Event { NoOp, ViralMutation, ImmuneMutation, NewInfection, Recovery };

std::string_view to_string(Event e) noexcept;

/// How the acting entity of a step is chosen.
enum class Selection {
    /// Viral or immune branch with probability 1/2 each, then a uniform
    /// entity of that branch.
    BranchThenEntity,
    /// A uniform site of sequence space; it acts as an immune receptor and/or
    /// an infected strain if it is one (a fair coin decides when it is both).
    UniformSite,
};

struct AutomatonParams {
    double q_vs = 0.9;  ///< viral copy fidelity
    double q_is = 0.9;  ///< immune copy fidelity
    unsigned n = 8;     ///< sequence length in bits
    std::vector<std::uint32_t> initial_strains;
    std::uint64_t max_steps = 100000;
    Selection selection = Selection::BranchThenEntity;
    /// Immune mutants join the receptor population.
    bool immune_mutants_persist = true;

    void validate() const;
};

/// Binary sequence space of 2^n sites: per-site S/I/R state plus the set of
/// immune receptors present.
class SequenceSpace {
public:
    /// All sites Susceptible, no receptors.
    explicit SequenceSpace(unsigned n);

    unsigned n() const noexcept { return n_; }
    std::size_t size() const noexcept { return state_.size(); }
    SiteState state(std::uint32_t site) const noexcept { return state_[site]; }
    const std::vector<SiteState>& states() const noexcept { return state_; }

    std::size_t susceptible() const noexcept { return size() - infected() - recovered_; }
    std::size_t infected() const noexcept { return infected_.size(); }
    std::size_t recovered() const noexcept { return recovered_; }
    bool absorbed() const noexcept { return infected_.empty(); }

    const std::vector<std::uint32_t>& infected_sites() const noexcept { return infected_; }
    const std::vector<std::uint32_t>& receptors() const noexcept { return receptors_; }
    bool has_receptor(std::uint32_t site) const noexcept { return has_receptor_[site] != 0; }

    /// Susceptible -> Infected; returns false if the site was not susceptible.
    bool infect(std::uint32_t site);
    /// Infected -> Recovered; returns false if the site was not infected.
    bool recover(std::uint32_t site);
    /// Adds a receptor; returns false if already present.
    bool add_receptor(std::uint32_t site);

    friend bool operator==(const SequenceSpace&, const SequenceSpace&) = default;

private:
    unsigned n_;
    std::vector<SiteState> state_;
    std::vector<std::uint32_t> infected_;
    std::vector<std::uint32_t> infected_pos_;
    std::size_t recovered_ = 0;
    std::vector<std::uint32_t> receptors_;
    std::vector<std::uint8_t> has_receptor_;
};

/// Infects the initial strains and registers a receptor for each. Throws
/// std::invalid_argument for duplicate or out-of-range strains.
SequenceSpace init(const AutomatonParams& params, RngStream& rng);

/// One automaton update.
///
/// Immune branch: a receptor replicates; with probability 1 - q_is one
/// uniformly chosen bit flips, the mutant receptor joins the population, and
/// an Infected site with the mutant's sequence recovers. Viral branch: an
/// infected strain replicates; with probability 1 - q_vs one bit flips, and a
/// Susceptible site with the mutant's sequence becomes Infected and gets a
/// receptor. An absorbed space (no infected sites) always returns NoOp.
Event step(SequenceSpace& space, const AutomatonParams& params, RngStream& rng);

struct TrajectoryPoint {
    std::uint64_t step = 0;
    std::size_t S = 0, I = 0, R = 0;
};

struct RunResult {
    std::vector<TrajectoryPoint> trajectory;
    SequenceSpace final_space;
    bool absorbed = false;
    std::uint64_t steps = 0;
};

/// Steps until absorption or params.max_steps. The trajectory holds step 0,
/// every `stride`-th step, and the final step.
RunResult run(const AutomatonParams& params, RngStream& rng, std::uint64_t stride = 1);
/// Same, from a prepared space (which may be empty).
RunResult run_from(SequenceSpace space, const AutomatonParams& params, RngStream& rng, std::uint64_t stride = 1);

struct PhaseCell {
    double q_vs = 0.0, q_is = 0.0;
    double infected_ratio = 0.0, se = 0.0;
};

struct PhaseOptions {
    unsigned n = 10;
    std::size_t grid_steps = 11;  ///< points per axis over [0, 1]
    std::size_t replicas = 20;
    std::uint64_t max_steps = 0;  ///< 0 means 8 * 2^n
    std::size_t initial_strains = 1;
    Selection selection = Selection::BranchThenEntity;
    bool immune_mutants_persist = true;
};

/// Mean final I / 2^n per (q_vs, q_is) cell; cell c replica r runs on
/// substream(substream(rng, c), r) from randomly placed initial strains.
/// Cells are ordered q_vs-major.
std::vector<PhaseCell> phase_diagram(const PhaseOptions& options, const RngStream& rng);

/// Connected groups of Infected sites under Hamming-distance-1 adjacency.
ClusterPartition infected_clusters(const SequenceSpace& space);

/// Distinct uniformly random strains.
std::vector<std::uint32_t> random_strains(unsigned n, std::size_t count, RngStream& rng);

}  // namespace critlab::hiv
