#include "critlab/hiv.hpp"

#include <algorithm>
#include <stdexcept>

#include "critlab/parallel.hpp"
#include "critlab/stats.hpp"

namespace critlab::hiv {

std::string_view to_string(Event e) noexcept {
    switch (e) {
        case Event::NoOp: return "noop";
        case Event::ViralMutation: return "viral_mutation";
        case Event::ImmuneMutation: return "immune_mutation";
        case Event::NewInfection: return "new_infection";
        case Event::Recovery: return "recovery";
    }
    return "unknown";
}

void AutomatonParams::validate() const {
    if (!(q_vs >= 0.0 && q_vs <= 1.0) || !(q_is >= 0.0 && q_is <= 1.0)) {
        throw std::invalid_argument("copy fidelities must lie in [0, 1]");
    }
    if (n == 0 || n > 24) {
        throw std::invalid_argument("sequence length must be in [1, 24]");
    }
    const std::uint64_t size = std::uint64_t{1} << n;
    std::vector<std::uint32_t> sorted = initial_strains;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw std::invalid_argument("initial strains must be distinct");
    }
    if (!sorted.empty() && sorted.back() >= size) {
        throw std::invalid_argument("initial strain outside sequence space");
    }
}

SequenceSpace::SequenceSpace(unsigned n)
    : n_(n),
      state_(std::size_t{1} << n, SiteState::Susceptible),
      infected_pos_(std::size_t{1} << n, 0),
      has_receptor_(std::size_t{1} << n, 0) {}

bool SequenceSpace::infect(std::uint32_t site) {
    if (state_.at(site) != SiteState::Susceptible) {
        return false;
    }
    state_[site] = SiteState::Infected;
    infected_pos_[site] = static_cast<std::uint32_t>(infected_.size());
    infected_.push_back(site);
    return true;
}

bool SequenceSpace::recover(std::uint32_t site) {
    if (state_.at(site) != SiteState::Infected) {
        return false;
    }
    state_[site] = SiteState::Recovered;
    ++recovered_;
    const std::uint32_t pos = infected_pos_[site];
    const std::uint32_t last = infected_.back();
    infected_[pos] = last;
    infected_pos_[last] = pos;
    infected_.pop_back();
    infected_pos_[site] = 0;
    return true;
}

bool SequenceSpace::add_receptor(std::uint32_t site) {
    if (has_receptor_.at(site)) {
        return false;
    }
    has_receptor_[site] = 1;
    receptors_.push_back(site);
    return true;
}

SequenceSpace init(const AutomatonParams& params, RngStream& /*rng*/) {
    params.validate();
    if (params.initial_strains.empty()) {
        throw std::invalid_argument("at least one initial strain is required");
    }
    SequenceSpace space(params.n);
    for (auto strain : params.initial_strains) {
        space.infect(strain);
        space.add_receptor(strain);
    }
    return space;
}

namespace {

Event immune_branch(SequenceSpace& space, std::uint32_t receptor, const AutomatonParams& params, RngStream& rng) {
    if (!rng.bernoulli(1.0 - params.q_is)) {
        return Event::NoOp;
    }
    const std::uint32_t mutant = receptor ^ (std::uint32_t{1} << rng.below(params.n));
    if (params.immune_mutants_persist) {
        space.add_receptor(mutant);
    }
    return space.recover(mutant) ? Event::Recovery : Event::ImmuneMutation;
}

Event viral_branch(SequenceSpace& space, std::uint32_t strain, const AutomatonParams& params, RngStream& rng) {
    if (!rng.bernoulli(1.0 - params.q_vs)) {
        return Event::NoOp;
    }
    const std::uint32_t mutant = strain ^ (std::uint32_t{1} << rng.below(params.n));
    if (space.infect(mutant)) {
        space.add_receptor(mutant);
        return Event::NewInfection;
    }
    return Event::ViralMutation;
}

}  // namespace

Event step(SequenceSpace& space, const AutomatonParams& params, RngStream& rng) {
    if (space.absorbed()) {
        return Event::NoOp;
    }
    if (params.selection == Selection::BranchThenEntity) {
        if (rng.below(2) == 0) {
            if (space.receptors().empty()) {
                return Event::NoOp;
            }
            const auto r = space.receptors()[rng.below(space.receptors().size())];
            return immune_branch(space, r, params, rng);
        }
        const auto v = space.infected_sites()[rng.below(space.infected())];
        return viral_branch(space, v, params, rng);
    }
    const auto site = static_cast<std::uint32_t>(rng.below(space.size()));
    const bool immune = space.has_receptor(site);
    const bool viral = space.state(site) == SiteState::Infected;
    if (immune && viral) {
        return rng.below(2) == 0 ? immune_branch(space, site, params, rng) : viral_branch(space, site, params, rng);
    }
    if (immune) {
        return immune_branch(space, site, params, rng);
    }
    if (viral) {
        return viral_branch(space, site, params, rng);
    }
    return Event::NoOp;
}

RunResult run_from(SequenceSpace space, const AutomatonParams& params, RngStream& rng, std::uint64_t stride) {
    params.validate();
    if (stride == 0) {
        stride = 1;
    }
    RunResult out{{}, std::move(space), false, 0};
    auto record = [&](std::uint64_t k) {
        const auto& sp = out.final_space;
        out.trajectory.push_back({k, sp.susceptible(), sp.infected(), sp.recovered()});
    };
    record(0);
    std::uint64_t k = 0;
    while (k < params.max_steps && !out.final_space.absorbed()) {
        step(out.final_space, params, rng);
        ++k;
        if (k % stride == 0) {
            record(k);
        }
    }
    if (out.trajectory.back().step != k) {
        record(k);
    }
    out.steps = k;
    out.absorbed = out.final_space.absorbed();
    return out;
}

RunResult run(const AutomatonParams& params, RngStream& rng, std::uint64_t stride) {
    return run_from(init(params, rng), params, rng, stride);
}

std::vector<std::uint32_t> random_strains(unsigned n, std::size_t count, RngStream& rng) {
    const std::uint64_t size = std::uint64_t{1} << n;
    if (count > size) {
        throw std::invalid_argument("more strains requested than sequences exist");
    }
    std::vector<std::uint32_t> out;
    while (out.size() < count) {
        const auto s = static_cast<std::uint32_t>(rng.below(size));
        if (std::find(out.begin(), out.end(), s) == out.end()) {
            out.push_back(s);
        }
    }
    return out;
}

std::vector<PhaseCell> phase_diagram(const PhaseOptions& options, const RngStream& rng) {
    if (options.grid_steps < 2 || options.replicas == 0) {
        throw std::invalid_argument("phase diagram needs at least two grid points and one replica");
    }
    const std::size_t g = options.grid_steps;
    const std::uint64_t budget = options.max_steps > 0 ? options.max_steps : (std::uint64_t{8} << options.n);
    std::vector<PhaseCell> cells(g * g);
    std::vector<double> ratios(g * g * options.replicas);
    parallel_for(g * g * options.replicas, [&](std::size_t job) {
        const std::size_t cell = job / options.replicas;
        const std::size_t replica = job % options.replicas;
        AutomatonParams params;
        params.n = options.n;
        params.q_vs = static_cast<double>(cell / g) / static_cast<double>(g - 1);
        params.q_is = static_cast<double>(cell % g) / static_cast<double>(g - 1);
        params.max_steps = budget;
        params.selection = options.selection;
        params.immune_mutants_persist = options.immune_mutants_persist;
        RngStream stream = substream(substream(rng, cell), replica);
        params.initial_strains = random_strains(options.n, options.initial_strains, stream);
        const RunResult r = run(params, stream, budget);
        ratios[job] = static_cast<double>(r.final_space.infected()) / static_cast<double>(r.final_space.size());
    });
    for (std::size_t c = 0; c < g * g; ++c) {
        const auto stats = mean_se(std::span<const double>(&ratios[c * options.replicas], options.replicas));
        cells[c] = {static_cast<double>(c / g) / static_cast<double>(g - 1),
                    static_cast<double>(c % g) / static_cast<double>(g - 1), stats.mean, stats.se};
    }
    return cells;
}

ClusterPartition infected_clusters(const SequenceSpace& space) {
    const unsigned n = space.n();
    return label_clusters(
        space.size(),
        [n](std::size_t i, auto&& visit) {
            for (unsigned b = 0; b < n; ++b) {
                visit(i ^ (std::size_t{1} << b));
            }
        },
        [](std::size_t, std::size_t) { return true; },
        [&](std::size_t i) { return space.state(static_cast<std::uint32_t>(i)) == SiteState::Infected; });
}

}  // namespace critlab::hiv
