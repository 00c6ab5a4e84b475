#include "critlab/ecra.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "critlab/parallel.hpp"

namespace critlab::ecra {

using md::Vec3;

Assignment canonical(const Assignment& assignment) {
    Assignment out(assignment.size());
    std::vector<std::pair<std::size_t, std::size_t>> seen;  // old id -> new id
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        auto it = std::find_if(seen.begin(), seen.end(), [&](const auto& p) { return p.first == assignment[i]; });
        if (it == seen.end()) {
            seen.emplace_back(assignment[i], seen.size());
            out[i] = seen.size() - 1;
        } else {
            out[i] = it->second;
        }
    }
    return out;
}

namespace {

std::vector<double> pair_matrix(const md::ParticleSystem& s, const md::PairPotential& potential) {
    const std::size_t n = s.size();
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double e = potential.energy(md::norm(s.positions[i] - s.positions[j]));
            v[i * n + j] = e;
            v[j * n + i] = e;
        }
    }
    return v;
}

// Energy of a cluster from its mass, momentum, lab kinetic energy and
// internal potential.
double cluster_energy(double mass, const Vec3& p, double kinetic, double potential) {
    return mass > 0.0 ? kinetic - md::dot(p, p) / (2.0 * mass) + potential : 0.0;
}

std::size_t distinct(const Assignment& a) {
    Assignment sorted = a;
    std::sort(sorted.begin(), sorted.end());
    return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

// Lower energy wins; within rounding, more fragments, then the smaller assignment.
bool better(double e, const Assignment& a, double best_e, const Assignment& best_a) {
    const double tol = 1e-10 * std::max(1.0, std::abs(best_e));
    if (e < best_e - tol) {
        return true;
    }
    if (std::abs(e - best_e) > tol) {
        return false;
    }
    const std::size_t ka = distinct(a), kb = distinct(best_a);
    return ka != kb ? ka > kb : a < best_a;
}

}  // namespace

EnergyBreakdown internal_energy(const md::ParticleSystem& system, const Assignment& raw,
                                const md::PairPotential& potential) {
    const std::size_t n = system.size();
    if (raw.size() != n) {
        throw std::invalid_argument("assignment must cover every particle");
    }
    const Assignment a = canonical(raw);
    const std::size_t clusters = n == 0 ? 0 : *std::max_element(a.begin(), a.end()) + 1;
    std::vector<double> mass(clusters, 0.0);
    std::vector<Vec3> momentum(clusters);
    std::vector<std::size_t> members(clusters, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++members[a[i]];
        mass[a[i]] += system.masses[i];
        momentum[a[i]] += system.masses[i] * system.velocities[i];
    }
    EnergyBreakdown out;
    out.per_cluster.assign(clusters, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (members[a[i]] == 1) {
            continue;
        }
        const Vec3 u = system.velocities[i] - momentum[a[i]] * (1.0 / mass[a[i]]);
        out.per_cluster[a[i]] += 0.5 * system.masses[i] * md::dot(u, u);
        for (std::size_t j = i + 1; j < n; ++j) {
            if (a[j] == a[i]) {
                out.per_cluster[a[i]] += potential.energy(md::norm(system.positions[i] - system.positions[j]));
            }
        }
    }
    for (double e : out.per_cluster) {
        out.total += e;
    }
    return out;
}

std::vector<std::size_t> FragmentPartition::cluster_sizes() const {
    std::vector<std::size_t> sizes(cluster_count(), 0);
    for (std::size_t c : assignment) {
        ++sizes[c];
    }
    std::sort(sizes.begin(), sizes.end(), std::greater<>());
    return sizes;
}

FragmentPartition evaluate(const md::ParticleSystem& system, const Assignment& assignment,
                           const md::PairPotential& potential) {
    auto e = internal_energy(system, assignment, potential);
    return {canonical(assignment), e.total, std::move(e.per_cluster)};
}

AnnealSchedule AnnealSchedule::defaults_for(const md::ParticleSystem& system, const md::PairPotential& potential) {
    const std::size_t n = system.size();
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double e = potential.energy(md::norm(system.positions[i] - system.positions[j]));
            if (e != 0.0) {
                sum += std::abs(e);
                ++count;
            }
        }
    }
    AnnealSchedule s;
    if (count > 0) {
        s.t_start = sum / static_cast<double>(count);
    } else if (n > 0) {
        const Vec3 v = system.center_of_mass_velocity();
        double k = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3 u = system.velocities[i] - v;
            k += 0.5 * system.masses[i] * md::dot(u, u);
        }
        s.t_start = k > 0.0 ? k / static_cast<double>(n) : 1.0;
    }
    s.t_end = 1e-3 * s.t_start;
    s.moves_per_temperature = 50 * std::max<std::size_t>(n, 1);
    return s;
}

void AnnealSchedule::validate() const {
    if (!(t_end > 0.0) || !(t_start > t_end) || !(cooling_factor > 0.0 && cooling_factor < 1.0) ||
        moves_per_temperature == 0 || restarts == 0) {
        throw std::invalid_argument("anneal schedule needs t_start > t_end > 0, cooling in (0, 1), moves and restarts > 0");
    }
}

namespace {

class PartitionState {
public:
    // `start` holds cluster ids below n.
    PartitionState(const md::ParticleSystem& s, const std::vector<double>& v, const Assignment& start)
        : s_(s), v_(v), n_(s.size()), assign_(start), mass_(n_, 0.0), p_(n_), k_(n_, 0.0), u_(n_, 0.0),
          count_(n_, 0), active_pos_(n_, none) {
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t c = assign_[i];
            mass_[c] += s.masses[i];
            p_[c] += s.masses[i] * s.velocities[i];
            k_[c] += 0.5 * s.masses[i] * md::dot(s.velocities[i], s.velocities[i]);
            ++count_[c];
            for (std::size_t j = i + 1; j < n_; ++j) {
                if (assign_[j] == c) {
                    u_[c] += v_[i * n_ + j];
                }
            }
        }
        for (std::size_t c = n_; c-- > 0;) {
            if (count_[c] == 0) {
                free_.push_back(c);
            }
        }
        for (std::size_t c = 0; c < n_; ++c) {
            if (count_[c] > 0) {
                activate(c);
                energy_ += energy_of(c);
            }
        }
    }

    double energy() const noexcept { return energy_; }
    const Assignment& assignment() const noexcept { return assign_; }
    const std::vector<std::size_t>& active() const noexcept { return active_; }
    std::size_t cluster_of(std::size_t i) const noexcept { return assign_[i]; }
    std::size_t size_of(std::size_t c) const noexcept { return count_[c]; }
    std::size_t spare() const noexcept { return free_.empty() ? none : free_.back(); }

    // Energy change of moving particle i to cluster `to` (a spare slot for a
    // new singleton).
    double delta(std::size_t i, std::size_t to) const noexcept {
        const std::size_t from = assign_[i];
        double u_from = 0.0, u_to = 0.0;
        for (std::size_t k = 0; k < n_; ++k) {
            if (k == i) {
                continue;
            }
            if (assign_[k] == from) {
                u_from += v_[i * n_ + k];
            } else if (assign_[k] == to) {
                u_to += v_[i * n_ + k];
            }
        }
        const double m = s_.masses[i];
        const Vec3 p = m * s_.velocities[i];
        const double kin = 0.5 * m * md::dot(s_.velocities[i], s_.velocities[i]);
        const double before = energy_of(from) + energy_of(to);
        const double left = count_[from] == 1
                                ? 0.0
                                : cluster_energy(mass_[from] - m, p_[from] - p, k_[from] - kin, u_[from] - u_from);
        const double after = left +
                             cluster_energy(mass_[to] + m, p_[to] + p, k_[to] + kin, u_[to] + u_to);
        last_u_from_ = u_from;
        last_u_to_ = u_to;
        return after - before;
    }

    // Applies the move last evaluated by delta(i, to).
    void apply(std::size_t i, std::size_t to, double de) {
        const std::size_t from = assign_[i];
        const double m = s_.masses[i];
        const Vec3 p = m * s_.velocities[i];
        const double kin = 0.5 * m * md::dot(s_.velocities[i], s_.velocities[i]);
        if (count_[to] == 0) {
            free_.pop_back();
            activate(to);
        }
        mass_[from] -= m;
        p_[from] -= p;
        k_[from] -= kin;
        u_[from] -= last_u_from_;
        --count_[from];
        mass_[to] += m;
        p_[to] += p;
        k_[to] += kin;
        u_[to] += last_u_to_;
        ++count_[to];
        assign_[i] = to;
        if (count_[from] == 0) {
            mass_[from] = 0.0;
            p_[from] = {};
            k_[from] = 0.0;
            u_[from] = 0.0;
            deactivate(from);
            free_.push_back(from);
        }
        energy_ += de;
    }

private:
    static constexpr std::size_t none = static_cast<std::size_t>(-1);

    double energy_of(std::size_t c) const noexcept { return cluster_energy(mass_[c], p_[c], k_[c], u_[c]); }

    void activate(std::size_t c) {
        active_pos_[c] = active_.size();
        active_.push_back(c);
    }

    void deactivate(std::size_t c) {
        const std::size_t pos = active_pos_[c];
        active_[pos] = active_.back();
        active_pos_[active_[pos]] = pos;
        active_.pop_back();
        active_pos_[c] = none;
    }

    const md::ParticleSystem& s_;
    const std::vector<double>& v_;
    std::size_t n_;
    Assignment assign_;
    std::vector<double> mass_;
    std::vector<Vec3> p_;
    std::vector<double> k_, u_;
    std::vector<std::size_t> count_;
    std::vector<std::size_t> active_;
    std::vector<std::size_t> active_pos_;
    std::vector<std::size_t> free_;
    double energy_ = 0.0;
    mutable double last_u_from_ = 0.0, last_u_to_ = 0.0;
};

// Repeated best-improvement single-particle moves until none lowers the energy.
void descend(PartitionState& state, std::size_t n) {
    bool improved = true;
    while (improved) {
        improved = false;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t from = state.cluster_of(i);
            double best = -1e-12 * std::max(1.0, std::abs(state.energy()));
            std::size_t best_to = from;
            auto consider = [&](std::size_t to) {
                const double d = state.delta(i, to);
                if (d < best) {
                    best = d;
                    best_to = to;
                }
            };
            for (std::size_t c : state.active()) {
                if (c != from) {
                    consider(c);
                }
            }
            if (state.size_of(from) > 1) {
                consider(state.spare());
            }
            if (best_to != from) {
                state.apply(i, best_to, state.delta(i, best_to));
                improved = true;
            }
        }
    }
}

struct RestartResult {
    Assignment best;
    std::vector<double> trace;
};

RestartResult anneal_once(const md::ParticleSystem& system, const std::vector<double>& v,
                          const AnnealSchedule& schedule, const Assignment& start, RngStream rng) {
    const std::size_t n = system.size();
    PartitionState state(system, v, start);
    RestartResult out{canonical(state.assignment()), {}};
    double best = state.energy();
    for (double t = schedule.t_start; t >= schedule.t_end; t *= schedule.cooling_factor) {
        for (std::size_t m = 0; m < schedule.moves_per_temperature; ++m) {
            const std::size_t i = rng.below(n);
            const std::size_t from = state.cluster_of(i);
            const auto& active = state.active();
            const std::size_t pick = rng.below(active.size() + 1);
            std::size_t to;
            if (pick == active.size()) {
                if (state.size_of(from) == 1) {
                    continue;
                }
                to = state.spare();
            } else {
                to = active[pick];
                if (to == from) {
                    continue;
                }
            }
            const double de = state.delta(i, to);
            if (de <= 0.0 || rng.uniform() < std::exp(-de / t)) {
                state.apply(i, to, de);
                if (state.energy() < best - 1e-12 * std::max(1.0, std::abs(best))) {
                    best = state.energy();
                    out.best = canonical(state.assignment());
                }
            }
        }
        out.trace.push_back(best);
    }
    PartitionState polished(system, v, out.best);
    descend(polished, n);
    if (polished.energy() < best) {
        out.best = canonical(polished.assignment());
        out.trace.push_back(polished.energy());
    }
    return out;
}

// Splits every cluster into its pieces connected by pairs inside the cutoff.
Assignment split_disconnected(const md::ParticleSystem& system, const Assignment& a, double r_cut) {
    const std::size_t n = a.size();
    Assignment out(n, n);
    std::size_t next = 0;
    std::vector<std::size_t> stack;
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (out[seed] != n) {
            continue;
        }
        out[seed] = next;
        stack.push_back(seed);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            for (std::size_t j = 0; j < n; ++j) {
                if (out[j] == n && a[j] == a[i] && md::norm(system.positions[i] - system.positions[j]) < r_cut) {
                    out[j] = next;
                    stack.push_back(j);
                }
            }
        }
        ++next;
    }
    return out;
}

}  // namespace

FragmentPartition anneal(const md::ParticleSystem& system, const md::PairPotential& potential,
                         const AnnealSchedule& schedule, const RngStream& rng, AnnealTrace* trace) {
    const std::size_t n = system.size();
    if (n == 0) {
        throw std::invalid_argument("anneal needs at least one particle");
    }
    schedule.validate();
    const auto v = pair_matrix(system, potential);

    const Assignment together(n, 0);
    Assignment singletons(n);
    for (std::size_t i = 0; i < n; ++i) {
        singletons[i] = i;
    }
    std::vector<RestartResult> runs(schedule.restarts);
    parallel_for(schedule.restarts, [&](std::size_t r) {
        runs[r] = anneal_once(system, v, schedule, r % 2 == 1 ? together : singletons, substream(rng, r));
    });

    std::vector<Assignment> candidates{together, singletons, split_disconnected(system, together, potential.r_cut)};
    for (auto& run : runs) {
        candidates.push_back(run.best);
        candidates.push_back(split_disconnected(system, run.best, potential.r_cut));
        if (trace) {
            trace->best_energy.insert(trace->best_energy.end(), run.trace.begin(), run.trace.end());
        }
    }

    FragmentPartition winner = evaluate(system, candidates.front(), potential);
    for (std::size_t c = 1; c < candidates.size(); ++c) {
        FragmentPartition f = evaluate(system, candidates[c], potential);
        if (better(f.internal_energy, f.assignment, winner.internal_energy, winner.assignment)) {
            winner = std::move(f);
        }
    }
    return winner;
}

FragmentPartition enumerate_partitions_min(const md::ParticleSystem& system, const md::PairPotential& potential,
                                           std::size_t* evaluated) {
    const std::size_t n = system.size();
    if (n > enumeration_limit) {
        throw std::invalid_argument("exhaustive enumeration is limited to " + std::to_string(enumeration_limit) +
                                    " particles");
    }
    if (evaluated) {
        *evaluated = 0;
    }
    if (n == 0) {
        return {};
    }
    const auto v = pair_matrix(system, potential);
    std::vector<double> kin(n);
    std::vector<Vec3> mom(n);
    for (std::size_t i = 0; i < n; ++i) {
        mom[i] = system.masses[i] * system.velocities[i];
        kin[i] = 0.5 * system.masses[i] * md::dot(system.velocities[i], system.velocities[i]);
    }

    Assignment a(n, 0);          // restricted growth string
    std::vector<std::size_t> prefix_max(n, 0);  // max of a[0..i]
    std::vector<double> mass(n), k(n), u(n);
    std::vector<Vec3> p(n);
    Assignment best_a;
    double best_e = 0.0;
    while (true) {
        std::fill(mass.begin(), mass.end(), 0.0);
        std::fill(k.begin(), k.end(), 0.0);
        std::fill(u.begin(), u.end(), 0.0);
        std::fill(p.begin(), p.end(), Vec3{});
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = a[i];
            mass[c] += system.masses[i];
            p[c] += mom[i];
            k[c] += kin[i];
            for (std::size_t j = i + 1; j < n; ++j) {
                if (a[j] == c) {
                    u[c] += v[i * n + j];
                }
            }
        }
        double e = 0.0;
        for (std::size_t c = 0; c <= prefix_max[n - 1]; ++c) {
            e += cluster_energy(mass[c], p[c], k[c], u[c]);
        }
        if (evaluated) {
            ++*evaluated;
        }
        if (best_a.empty() || better(e, a, best_e, best_a)) {
            best_e = e;
            best_a = a;
        }
        // Next restricted growth string in lexicographic order.
        std::size_t i = n - 1;
        while (i > 0 && a[i] == prefix_max[i - 1] + 1) {
            --i;
        }
        if (i == 0) {
            break;
        }
        ++a[i];
        prefix_max[i] = std::max(prefix_max[i - 1], a[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
            a[j] = 0;
            prefix_max[j] = prefix_max[i];
        }
    }
    return evaluate(system, best_a, potential);
}

fit::EventRecord fragment_sizes(const FragmentPartition& partition, std::optional<double> control) {
    return {partition.cluster_sizes(), control};
}

}  // namespace critlab::ecra
