#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "critlab/rng.hpp"

namespace critlab::md {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3& operator+=(const Vec3& o) noexcept { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) noexcept { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) noexcept { x *= s; y *= s; z *= s; return *this; }
    friend Vec3 operator+(Vec3 a, const Vec3& b) noexcept { return a += b; }
    friend Vec3 operator-(Vec3 a, const Vec3& b) noexcept { return a -= b; }
    friend Vec3 operator*(Vec3 a, double s) noexcept { return a *= s; }
    friend Vec3 operator*(double s, Vec3 a) noexcept { return a *= s; }
    friend Vec3 operator-(Vec3 a) noexcept { return a *= -1.0; }
    friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(const Vec3& a, const Vec3& b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm(const Vec3& a) noexcept;

/// Point particles with positions, velocities, masses and species labels.
struct ParticleSystem {
    std::vector<Vec3> positions;
    std::vector<Vec3> velocities;
    std::vector<double> masses;
    std::vector<std::string> species;

    std::size_t size() const noexcept { return positions.size(); }
    void add(const Vec3& r, const Vec3& v, double m = 1.0, std::string tag = "n");
    /// Throws std::invalid_argument on inconsistent lengths, non-positive
    /// masses or coincident particles.
    void validate() const;

    double total_mass() const noexcept;
    Vec3 momentum() const noexcept;
    Vec3 center_of_mass() const noexcept;
    Vec3 center_of_mass_velocity() const noexcept;
    double kinetic_energy() const noexcept;

    void translate(const Vec3& d) noexcept;
    void boost(const Vec3& dv) noexcept;
};

/// Appends the particles of b to a; returns the result.
ParticleSystem merge(const ParticleSystem& a, const ParticleSystem& b);

/// Two particles closer than the hard floor.
class DegenerateConfiguration : public std::runtime_error {
public:
    DegenerateConfiguration(std::size_t i, std::size_t j, double r);
    std::size_t i, j;
    double r;
};

/// Shifted-force Lennard-Jones pair potential:
/// V(r) = u(r) - u(rc) - (r - rc) u'(rc) for r < rc, 0 beyond, with
/// u(r) = 4 eps ((sigma/r)^12 - (sigma/r)^6). Energy and force both vanish
/// continuously at the cutoff.
struct PairPotential {
    double epsilon = 1.0;
    double sigma = 1.0;
    double r_cut = 3.0;

    static constexpr double hard_floor = 1e-6;

    double energy(double r) const noexcept;
    /// -dV/dr; positive is repulsive.
    double force(double r) const noexcept;
    /// Separation of the potential minimum (found by Newton iteration).
    double minimum_separation() const;
    double minimum_energy() const { return energy(minimum_separation()); }
    void validate() const;
};

struct ForceResult {
    std::vector<Vec3> forces;
    double potential = 0.0;
};

/// Pairwise forces and total potential energy. Throws DegenerateConfiguration
/// when a pair is closer than PairPotential::hard_floor.
ForceResult forces(const ParticleSystem& system, const PairPotential& potential);
double potential_energy(const ParticleSystem& system, const PairPotential& potential);
double total_energy(const ParticleSystem& system, const PairPotential& potential);

/// Velocity Verlet with cached forces. An optional spherical harmonic wall
/// (stiffness k beyond radius R about the origin) confines the particles.
class VelocityVerlet {
public:
    VelocityVerlet(const ParticleSystem& system, const PairPotential& potential, double dt);

    void step(ParticleSystem& system);
    double dt() const noexcept { return dt_; }
    /// Potential energy at the current positions, wall included.
    double potential() const noexcept { return potential_; }

    void set_wall(double radius, double stiffness);
    void clear_wall();
    bool confined() const noexcept { return wall_radius_ > 0.0; }

private:
    void compute(const ParticleSystem& system);

    PairPotential potential_fn_;
    double dt_;
    double wall_radius_ = 0.0;
    double wall_stiffness_ = 0.0;
    std::vector<Vec3> forces_;
    double potential_ = 0.0;
};

/// One velocity-Verlet step with freshly computed forces.
void verlet_step(ParticleSystem& system, const PairPotential& potential, double dt);

struct DropletOptions {
    double dt = 0.001;
    double initial_kinetic = 1.0;   ///< kinetic energy per particle at start
    double cooling_factor = 0.99;   ///< velocity rescale
    std::size_t cooling_interval = 10;
    std::size_t max_steps = 100000;
    /// Kinetic energy per particle marking the end of the confined stage.
    double confined_kinetic = 0.05;
    /// Kinetic energy per particle below which the droplet counts as stuck
    /// above the target and is reheated.
    double stuck_kinetic = 1e-4;
    double reheat_kinetic = 1.2;
    double wall_stiffness = 50.0;
    double density = 0.8;
};

/// Droplet failed to reach the requested binding within the step budget.
class BindingFailure : public std::runtime_error {
public:
    BindingFailure(const std::string& what, double energy_per_particle, std::size_t steps);
    double energy_per_particle;
    std::size_t steps;
};

struct Droplet {
    ParticleSystem system;
    double energy = 0.0;
    std::size_t steps = 0;
    std::size_t reheats = 0;
};

/// Hot random start inside a confining sphere, cooled by velocity rescaling,
/// released and cooled further until total energy per particle is at most
/// `target_energy_per_particle` (and negative). Centered at the origin with
/// zero total momentum.
Droplet prepare_droplet(std::size_t n_particles, double target_energy_per_particle, const PairPotential& potential,
                        RngStream& rng, const DropletOptions& options = {});

struct Snapshot {
    double time = 0.0;
    ParticleSystem system;
    double energy = 0.0;
    Vec3 momentum;
};

void write_snapshot(std::ostream& out, const Snapshot& snapshot);
/// Throws std::runtime_error on malformed input.
Snapshot read_snapshot(std::istream& in);

class EnergyDriftError : public std::runtime_error {
public:
    EnergyDriftError(double drift, double time, double suggested_dt);
    double drift;
    double time;
    double suggested_dt;
};

struct CollisionOptions {
    double dt = 0.001;
    double t_end = 20.0;
    std::size_t snapshot_stride = 1000;
    double max_drift = 1e-4;
    /// Surface gap beyond the cutoff at t = 0.
    double gap = 0.5;
};

struct CollisionResult {
    std::vector<Snapshot> snapshots;
    double initial_energy = 0.0;
    double max_drift = 0.0;  ///< max |E(t) - E(0)| / |E(0)| over all steps
};

/// Places the projectile on the -x side of the target with its center offset
/// by `impact_parameter` along y, gives it lab kinetic energy
/// `beam_energy_per_particle` per particle toward +x and moves to the center
/// of mass frame. Snapshots at step 0, every `snapshot_stride` steps and the
/// last step. Throws EnergyDriftError when the drift bound is exceeded.
CollisionResult collide(const ParticleSystem& projectile, const ParticleSystem& target,
                        double beam_energy_per_particle, double impact_parameter, const PairPotential& potential,
                        const CollisionOptions& options = {});

/// Groups of particles connected by chains of pairs closer than `radius`.
std::vector<std::size_t> geometric_fragment_sizes(const ParticleSystem& system, double radius);

}  // namespace critlab::md
