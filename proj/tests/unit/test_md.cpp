#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "critlab/ecra.hpp"
#include "critlab/md.hpp"
#include "oracles.hpp"

using namespace critlab;
using namespace critlab::md;

namespace {

const PairPotential lj{};

ParticleSystem random_cloud(std::size_t n, double box, double min_sep, RngStream& rng) {
    ParticleSystem s;
    while (s.size() < n) {
        const Vec3 r{box * rng.uniform(), box * rng.uniform(), box * rng.uniform()};
        bool clear = true;
        for (const auto& q : s.positions) clear = clear && norm(r - q) > min_sep;
        if (clear) s.add(r, {rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform() - 0.5});
    }
    return s;
}

double momentum_scale(const ParticleSystem& s) {
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) sum += s.masses[i] * norm(s.velocities[i]);
    return sum;
}

std::size_t ecra_fragments(const ParticleSystem& s, std::uint64_t seed) {
    const auto schedule = ecra::AnnealSchedule::defaults_for(s, lj);
    return ecra::anneal(s, lj, schedule, RngStream(seed)).cluster_count();
}

}  // namespace

TEST_CASE("particle system bookkeeping") {
    ParticleSystem s;
    s.add({0, 0, 0}, {1, 0, 0}, 2.0, "p");
    s.add({1, 0, 0}, {-1, 1, 0});
    CHECK(s.total_mass() == 3.0);
    CHECK(s.momentum() == Vec3{1, 1, 0});
    CHECK(s.center_of_mass().x == doctest::Approx(1.0 / 3.0));
    CHECK(s.kinetic_energy() == doctest::Approx(1.0 + 1.0));
    s.validate();
    auto bad = s;
    bad.masses[1] = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = s;
    bad.positions[1] = bad.positions[0];
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = s;
    bad.species.pop_back();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK(merge(s, s).size() == 4);
}

TEST_CASE("shifted-force potential") {
    CHECK(lj.energy(3.0) == 0.0);
    CHECK(lj.energy(3.5) == 0.0);
    CHECK(std::abs(lj.force(3.0 - 1e-9)) < 1e-9);
    CHECK(std::abs(lj.energy(3.0 - 1e-9)) < 1e-12);
    for (double r = 0.8; r < 3.0; r += 0.05) {
        CHECK(lj.energy(r) == doctest::Approx(oracle::lj_shifted_force(r)).epsilon(1e-12));
    }
    const double r0 = lj.minimum_separation();
    CHECK(std::abs(lj.force(r0)) < 1e-10);
    CHECK(lj.minimum_energy() == doctest::Approx(oracle::lj_shifted_force(r0)));
    CHECK(lj.minimum_energy() < lj.energy(r0 * 0.99));
    CHECK(lj.minimum_energy() < lj.energy(r0 * 1.01));
    CHECK_THROWS_AS((PairPotential{1.0, 1.0, -1.0}.validate()), std::invalid_argument);
}

TEST_CASE("forces: stationary dimer, lone particle, degenerate pair") {
    ParticleSystem dimer;
    dimer.add({0, 0, 0}, {});
    dimer.add({lj.minimum_separation(), 0, 0}, {});
    const auto f = forces(dimer, lj);
    CHECK(norm(f.forces[0]) < 1e-10);
    CHECK(norm(f.forces[1]) < 1e-10);
    ParticleSystem one;
    one.add({1, 2, 3}, {});
    CHECK(norm(forces(one, lj).forces[0]) == 0.0);
    ParticleSystem close;
    close.add({0, 0, 0}, {});
    close.add({1e-8, 0, 0}, {});
    CHECK_THROWS_AS(forces(close, lj), DegenerateConfiguration);
}

TEST_CASE("forces equal the central-difference gradient") {
    RngStream rng(1);
    std::size_t failures = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto s = random_cloud(5, 2.5, 0.9, rng);
        const auto f = forces(s, lj);
        const auto fd = oracle::finite_difference_forces(s.positions, 1e-5);
        double scale = 0.0;
        for (const auto& v : fd) scale = std::max(scale, norm(v));
        Vec3 total;
        for (std::size_t i = 0; i < s.size(); ++i) {
            failures += norm(f.forces[i] - fd[i]) > 1e-6 * scale;
            total += f.forces[i];
        }
        failures += norm(total) > 1e-12 * scale;
        failures += std::abs(f.potential - oracle::lj_total(s.positions)) > 1e-12 * std::max(1.0, std::abs(f.potential));
    }
    CHECK(failures == 0);
}

TEST_CASE("free particle moves by v dt") {
    ParticleSystem s;
    s.add({0.5, -1.0, 2.0}, {0.25, 0.5, -0.125});
    verlet_step(s, lj, 0.5);
    CHECK(s.positions[0] == Vec3{0.5 + 0.125, -1.0 + 0.25, 2.0 - 0.0625});
    CHECK(s.velocities[0] == Vec3{0.25, 0.5, -0.125});
}

TEST_CASE("two-body circular orbit keeps its radius") {
    const double r0 = 1.5;
    const double f = std::abs(lj.force(r0));
    const double v = std::sqrt(f * r0 / 2.0);
    ParticleSystem s;
    s.add({-r0 / 2, 0, 0}, {0, -v, 0});
    s.add({r0 / 2, 0, 0}, {0, v, 0});
    const double period = 2.0 * std::numbers::pi * (r0 / 2.0) / v;
    const double dt = 1e-4;
    VelocityVerlet integrator(s, lj, dt);
    double worst = 0.0;
    for (double t = 0.0; t < period; t += dt) {
        integrator.step(s);
        worst = std::max(worst, std::abs(norm(s.positions[0] - s.positions[1]) - r0));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("Verlet is time reversible and conserves momentum") {
    RngStream rng(2);
    auto s = random_cloud(12, 3.0, 1.0, rng);
    const auto start = s.positions;
    const Vec3 p0 = s.momentum();
    const double scale = momentum_scale(s);
    VelocityVerlet forward(s, lj, 0.001);
    for (int k = 0; k < 2000; ++k) {
        forward.step(s);
        CHECK(norm(s.momentum() - p0) <= 1e-12 * std::max(1.0, scale));
    }
    for (auto& v : s.velocities) v = -v;
    VelocityVerlet back(s, lj, 0.001);
    for (int k = 0; k < 2000; ++k) back.step(s);
    double worst = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) worst = std::max(worst, norm(s.positions[i] - start[i]));
    CHECK(worst < 1e-6);
}

TEST_CASE("dimer droplet sits at the potential minimum") {
    RngStream rng(3);
    const double vmin = lj.minimum_energy();
    const auto d = prepare_droplet(2, 0.99 * vmin / 2.0, lj, rng);
    CHECK(d.energy < 0.0);
    CHECK(d.energy == doctest::Approx(vmin).epsilon(0.01));
    CHECK(d.system.kinetic_energy() < 0.01 * std::abs(vmin));
    CHECK(norm(d.system.momentum()) < 1e-10);
    CHECK_THROWS_AS(prepare_droplet(1, -1.0, lj, rng), std::invalid_argument);
}

TEST_CASE("13-particle droplet reaches the basin-hopping minimum within 5%") {
    const double e_min = oracle::basin_hopping_minimum(13, 300, 17);
    RngStream rng(4);
    const auto d = prepare_droplet(13, 0.97 * e_min / 13.0, lj, rng);
    CHECK(d.energy < 0.0);
    CHECK(std::abs(d.energy - e_min) <= 0.05 * std::abs(e_min));
    MESSAGE("basin hopping " << e_min << ", droplet " << d.energy << ", reheats " << d.reheats);
}

TEST_CASE("droplet preparation is deterministic") {
    RngStream a(5), b(5);
    const auto x = prepare_droplet(8, -2.0, lj, a);
    const auto y = prepare_droplet(8, -2.0, lj, b);
    CHECK(x.system.positions == y.system.positions);
    CHECK(x.energy == y.energy);
}

TEST_CASE("resting droplets beyond the cutoff stay two fragments") {
    RngStream rng(6);
    const auto a = prepare_droplet(10, -2.0, lj, rng);
    const auto b = prepare_droplet(10, -2.0, lj, rng);
    CollisionOptions opts;
    opts.t_end = 5.0;
    opts.snapshot_stride = 500;
    const auto r = collide(a.system, b.system, 0.0, 0.0, lj, opts);
    for (const auto& snap : r.snapshots) {
        CHECK(geometric_fragment_sizes(snap.system, lj.r_cut).size() == 2);
    }
    CHECK(ecra_fragments(r.snapshots.back().system, 1) == 2);
    CHECK(r.max_drift < 1e-4);
}

TEST_CASE("energetic head-on collision fragments; energy and momentum conserved") {
    RngStream rng(7);
    const auto a = prepare_droplet(13, -3.0, lj, rng);
    const auto b = prepare_droplet(13, -3.0, lj, rng);
    CollisionOptions opts;
    opts.dt = 0.0005;
    opts.t_end = 12.0;
    opts.snapshot_stride = 2000;
    const auto r = collide(a.system, b.system, 25.0, 0.0, lj, opts);
    CHECK(r.max_drift < 1e-4);
    const Vec3 p0 = r.snapshots.front().momentum;
    const double scale = momentum_scale(r.snapshots.front().system);
    for (const auto& snap : r.snapshots) {
        CHECK(norm(snap.momentum - p0) <= 1e-8 * scale);
        const double recomputed = total_energy(snap.system, lj);
        CHECK(std::abs(recomputed - snap.energy) <= 1e-8 * std::abs(snap.energy));
    }
    const auto first = ecra_fragments(r.snapshots.front().system, 2);
    const auto last = ecra_fragments(r.snapshots.back().system, 3);
    CHECK(first == 2);
    CHECK(last > first);
}

TEST_CASE("excess drift aborts with a smaller suggested step") {
    RngStream rng(8);
    const auto a = prepare_droplet(13, -3.0, lj, rng);
    const auto b = prepare_droplet(13, -3.0, lj, rng);
    CollisionOptions opts;
    opts.dt = 0.01;
    opts.t_end = 10.0;
    try {
        collide(a.system, b.system, 25.0, 0.0, lj, opts);
        FAIL("expected EnergyDriftError");
    } catch (const EnergyDriftError& e) {
        CHECK(e.drift > 1e-4);
        CHECK(e.suggested_dt == doctest::Approx(0.005));
    }
    CHECK_THROWS_AS(collide(a.system, b.system, -1.0, 0.0, lj, opts), std::invalid_argument);
}

TEST_CASE("snapshots round-trip exactly") {
    RngStream rng(9);
    Snapshot snap;
    snap.time = 1.25;
    snap.system = random_cloud(6, 3.0, 0.9, rng);
    snap.system.species[2] = "p";
    snap.energy = total_energy(snap.system, lj);
    snap.momentum = snap.system.momentum();
    std::stringstream io;
    write_snapshot(io, snap);
    const auto back = read_snapshot(io);
    CHECK(back.time == snap.time);
    CHECK(back.energy == snap.energy);
    CHECK(back.momentum == snap.momentum);
    CHECK(back.system.positions == snap.system.positions);
    CHECK(back.system.velocities == snap.system.velocities);
    CHECK(back.system.species == snap.system.species);

    std::istringstream broken("time = 0\nn = 2\nenergy = x\n");
    CHECK_THROWS_AS(read_snapshot(broken), std::runtime_error);
    std::istringstream short_body("time = 0\nn = 2\nenergy = 1\nmomentum = 0 0 0\nid,species,m,x,y,z,vx,vy,vz\n0,n,1,0,0,0,0,0,0\n");
    CHECK_THROWS_AS(read_snapshot(short_body), std::runtime_error);
}
