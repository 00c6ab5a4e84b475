#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "critlab/ecra.hpp"
#include "oracles.hpp"

using namespace critlab;
using namespace critlab::ecra;
using md::ParticleSystem;
using md::Vec3;

namespace {

const md::PairPotential lj{};

ParticleSystem random_system(std::size_t n, RngStream& rng, double box, double vscale) {
    ParticleSystem s;
    while (s.size() < n) {
        const Vec3 r{rng.uniform() * box, rng.uniform() * box, rng.uniform() * box};
        bool clear = true;
        for (const auto& q : s.positions) clear = clear && md::norm(r - q) >= 0.9;
        if (clear) {
            s.add(r, {(2 * rng.uniform() - 1) * vscale, (2 * rng.uniform() - 1) * vscale,
                      (2 * rng.uniform() - 1) * vscale},
                  0.5 + rng.uniform());
        }
    }
    return s;
}

Assignment random_assignment(std::size_t n, RngStream& rng) {
    Assignment a(n);
    const std::size_t k = 1 + rng.below(n);
    for (auto& x : a) x = rng.below(k) * 7 + 3;  // arbitrary, non-canonical ids
    return a;
}

}  // namespace

TEST_CASE("canonical relabeling") {
    CHECK(canonical({5, 5, 2, 9, 2}) == Assignment{0, 0, 1, 2, 1});
    CHECK(canonical({}) == Assignment{});
}

TEST_CASE("internal energy examples") {
    RngStream rng(1);
    const auto s = random_system(6, rng, 3.0, 1.0);
    Assignment singletons(6);
    std::iota(singletons.begin(), singletons.end(), 0);
    CHECK(internal_energy(s, singletons, lj).total == 0.0);

    ParticleSystem dimer;
    dimer.add({0, 0, 0}, {});
    dimer.add({lj.minimum_separation(), 0, 0}, {});
    const auto e = internal_energy(dimer, {0, 0}, lj);
    CHECK(e.total == doctest::Approx(lj.minimum_energy()).epsilon(1e-12));
    CHECK(e.per_cluster.size() == 1);
    CHECK_THROWS_AS(internal_energy(dimer, {0}, lj), std::invalid_argument);
}

TEST_CASE("internal energy matches the re-summation oracle") {
    RngStream rng(2);
    std::size_t failures = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const auto s = random_system(6, rng, 3.0, 1.0);
        const auto a = random_assignment(6, rng);
        const auto e = internal_energy(s, a, lj);
        const auto ref = oracle::cluster_energies(s, a);
        const auto canon = canonical(a);
        double total = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            failures += std::abs(e.per_cluster[canon[i]] - ref.at(a[i])) > 1e-10 * std::max(1.0, std::abs(ref.at(a[i])));
        }
        for (const auto& [id, v] : ref) total += v;
        failures += std::abs(e.total - total) > 1e-10 * std::max(1.0, std::abs(total));
        const double sum = std::accumulate(e.per_cluster.begin(), e.per_cluster.end(), 0.0);
        failures += std::abs(e.total - sum) > 1e-10 * std::max(1.0, std::abs(sum));
    }
    CHECK(failures == 0);
}

TEST_CASE("internal energy is invariant under a global boost and particle permutation") {
    RngStream rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        auto s = random_system(7, rng, 3.0, 1.0);
        const auto a = random_assignment(7, rng);
        const double e = internal_energy(s, a, lj).total;
        auto boosted = s;
        boosted.boost({3.0, -1.5, 0.25});
        CHECK(std::abs(internal_energy(boosted, a, lj).total - e) <= 1e-8 * std::max(1.0, std::abs(e)));

        std::vector<std::size_t> perm(7);
        std::iota(perm.begin(), perm.end(), 0);
        std::reverse(perm.begin(), perm.end());
        std::rotate(perm.begin(), perm.begin() + 2, perm.end());
        ParticleSystem p;
        Assignment pa;
        for (auto i : perm) {
            p.add(s.positions[i], s.velocities[i], s.masses[i]);
            pa.push_back(a[i]);
        }
        CHECK(internal_energy(p, pa, lj).total == doctest::Approx(e).epsilon(1e-12));
    }
}

TEST_CASE("evaluate and fragment sizes") {
    RngStream rng(4);
    const auto s = random_system(10, rng, 4.0, 0.5);
    Assignment singletons(10);
    std::iota(singletons.begin(), singletons.end(), 0);
    const auto all = evaluate(s, singletons, lj);
    const auto rec = fragment_sizes(all);
    CHECK(rec.multiplicity() == 10);
    CHECK(rec.fragment_sizes == std::vector<std::size_t>(10, 1));
    const auto one = evaluate(s, Assignment(10, 4), lj);
    CHECK(one.assignment == Assignment(10, 0));
    CHECK(fragment_sizes(one, 2.5).multiplicity() == 1);
    CHECK(fragment_sizes(one, 2.5).control == 2.5);
    const auto mixed = evaluate(s, {0, 1, 1, 2, 2, 2, 0, 3, 3, 3}, lj);
    const auto sizes = fragment_sizes(mixed).fragment_sizes;
    CHECK(sizes == std::vector<std::size_t>{3, 3, 2, 2});
    CHECK(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) == 10);
    const double sum = std::accumulate(mixed.per_cluster_energy.begin(), mixed.per_cluster_energy.end(), 0.0);
    CHECK(std::abs(mixed.internal_energy - sum) <= 1e-10 * std::max(1.0, std::abs(sum)));
}

TEST_CASE("enumeration counts Bell numbers and guards its size") {
    RngStream rng(5);
    CHECK(oracle::bell(3) == 5);
    CHECK(oracle::bell(8) == 4140);
    CHECK(oracle::bell(12) == 4213597);
    for (std::size_t n = 1; n <= 7; ++n) {
        std::size_t evaluated = 0;
        const auto s = random_system(n, rng, 3.0, 0.5);
        const auto best = enumerate_partitions_min(s, lj, &evaluated);
        CHECK(evaluated == oracle::bell(static_cast<unsigned>(n)));
        CHECK(best.internal_energy <= 0.0);
    }
    const auto big = random_system(13, rng, 6.0, 0.5);
    CHECK_THROWS_AS(enumerate_partitions_min(big, lj), std::invalid_argument);
}

TEST_CASE("single particle") {
    ParticleSystem s;
    s.add({0, 0, 0}, {1, 0, 0});
    const auto a = anneal(s, lj, AnnealSchedule::defaults_for(s, lj), RngStream(6));
    CHECK(a.cluster_count() == 1);
    CHECK(a.internal_energy == 0.0);
    CHECK(enumerate_partitions_min(s, lj).cluster_count() == 1);
}

TEST_CASE("receding dimers are found as two dimers") {
    // Two bound dimers far apart, flying away from each other fast.
    const double r0 = lj.minimum_separation();
    ParticleSystem s;
    s.add({0, 0, 0}, {-2, 0, 0});
    s.add({r0, 0, 0}, {-2, 0, 0});
    s.add({2.5 + r0, 0, 0}, {2, 0, 0});
    s.add({2.5 + 2 * r0, 0, 0}, {2, 0, 0});
    std::size_t evaluated = 0;
    const auto exact = enumerate_partitions_min(s, lj, &evaluated);
    CHECK(evaluated == 15);
    CHECK(exact.assignment == Assignment{0, 0, 1, 1});
    const auto a = anneal(s, lj, AnnealSchedule::defaults_for(s, lj), RngStream(7));
    CHECK(a.assignment == Assignment{0, 0, 1, 1});
}

TEST_CASE("anneal agrees with enumeration on small systems") {
    RngStream rng(8);
    int equal = 0, worse = 0;
    for (int k = 0; k < 30; ++k) {
        const std::size_t n = 3 + rng.below(6);
        const auto s = random_system(n, rng, 3.0, 0.7);
        const auto exact = enumerate_partitions_min(s, lj);
        const auto a = anneal(s, lj, AnnealSchedule::defaults_for(s, lj), substream(rng, 100 + k));
        const double d = a.internal_energy - exact.internal_energy;
        CHECK(a.internal_energy <= 1e-12);
        CHECK(a.internal_energy <= evaluate(s, Assignment(n, 0), lj).internal_energy + 1e-12);
        equal += d <= 1e-9 * std::max(1.0, std::abs(exact.internal_energy));
        worse += d > 0.01 * std::abs(exact.internal_energy);
    }
    CHECK(equal >= 29);
    CHECK(worse == 0);
}

TEST_CASE("anneal trace is non-increasing and results are deterministic") {
    RngStream rng(9);
    const auto s = random_system(8, rng, 3.0, 0.7);
    const auto schedule = AnnealSchedule::defaults_for(s, lj);
    CHECK(schedule.t_end == doctest::Approx(1e-3 * schedule.t_start));
    CHECK(schedule.moves_per_temperature == 50 * 8);
    CHECK(schedule.restarts == 4);
    AnnealTrace trace;
    const auto a = anneal(s, lj, schedule, RngStream(10), &trace);
    REQUIRE(!trace.best_energy.empty());
    REQUIRE(trace.best_energy.size() % schedule.restarts == 0);
    const std::size_t levels = trace.best_energy.size() / schedule.restarts;
    for (std::size_t i = 1; i < trace.best_energy.size(); ++i) {
        if (i % levels != 0) {
            CHECK(trace.best_energy[i] <= trace.best_energy[i - 1]);
        }
    }
    CHECK(a.internal_energy <= *std::min_element(trace.best_energy.begin(), trace.best_energy.end()) + 1e-12);
    const auto b = anneal(s, lj, schedule, RngStream(10));
    CHECK(a.assignment == b.assignment);
    CHECK(a.internal_energy == b.internal_energy);
}

TEST_CASE("schedule validation") {
    AnnealSchedule bad;
    bad.t_end = 2.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.cooling_factor = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    ParticleSystem empty;
    CHECK_THROWS_AS(anneal(empty, lj, AnnealSchedule{}, RngStream(1)), std::invalid_argument);
}
