#include "critlab/md.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "critlab/clusters.hpp"

namespace critlab::md {

double norm(const Vec3& a) noexcept { return std::sqrt(dot(a, a)); }

void ParticleSystem::add(const Vec3& r, const Vec3& v, double m, std::string tag) {
    positions.push_back(r);
    velocities.push_back(v);
    masses.push_back(m);
    species.push_back(std::move(tag));
}

void ParticleSystem::validate() const {
    const std::size_t n = positions.size();
    if (velocities.size() != n || masses.size() != n || species.size() != n) {
        throw std::invalid_argument("particle arrays have inconsistent lengths");
    }
    for (double m : masses) {
        if (!(m > 0.0)) {
            throw std::invalid_argument("particle masses must be positive");
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (positions[i] == positions[j]) {
                throw std::invalid_argument("coincident particles " + std::to_string(i) + " and " +
                                            std::to_string(j));
            }
        }
    }
}

double ParticleSystem::total_mass() const noexcept {
    double m = 0.0;
    for (double x : masses) {
        m += x;
    }
    return m;
}

Vec3 ParticleSystem::momentum() const noexcept {
    Vec3 p;
    for (std::size_t i = 0; i < size(); ++i) {
        p += masses[i] * velocities[i];
    }
    return p;
}

Vec3 ParticleSystem::center_of_mass() const noexcept {
    Vec3 c;
    for (std::size_t i = 0; i < size(); ++i) {
        c += masses[i] * positions[i];
    }
    const double m = total_mass();
    return m > 0.0 ? c * (1.0 / m) : c;
}

Vec3 ParticleSystem::center_of_mass_velocity() const noexcept {
    const double m = total_mass();
    return m > 0.0 ? momentum() * (1.0 / m) : Vec3{};
}

double ParticleSystem::kinetic_energy() const noexcept {
    double k = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        k += 0.5 * masses[i] * dot(velocities[i], velocities[i]);
    }
    return k;
}

void ParticleSystem::translate(const Vec3& d) noexcept {
    for (auto& r : positions) {
        r += d;
    }
}

void ParticleSystem::boost(const Vec3& dv) noexcept {
    for (auto& v : velocities) {
        v += dv;
    }
}

ParticleSystem merge(const ParticleSystem& a, const ParticleSystem& b) {
    ParticleSystem out = a;
    out.positions.insert(out.positions.end(), b.positions.begin(), b.positions.end());
    out.velocities.insert(out.velocities.end(), b.velocities.begin(), b.velocities.end());
    out.masses.insert(out.masses.end(), b.masses.begin(), b.masses.end());
    out.species.insert(out.species.end(), b.species.begin(), b.species.end());
    return out;
}

DegenerateConfiguration::DegenerateConfiguration(std::size_t i_, std::size_t j_, double r_)
    : std::runtime_error("particles " + std::to_string(i_) + " and " + std::to_string(j_) +
                         " are closer than the hard floor (r = " + std::to_string(r_) + ")"),
      i(i_),
      j(j_),
      r(r_) {}

namespace {

double lj(double eps, double sigma, double r) noexcept {
    const double s2 = sigma * sigma / (r * r);
    const double s6 = s2 * s2 * s2;
    return 4.0 * eps * (s6 * s6 - s6);
}

// -du/dr of the bare potential.
double lj_force(double eps, double sigma, double r) noexcept {
    const double s2 = sigma * sigma / (r * r);
    const double s6 = s2 * s2 * s2;
    return 24.0 * eps * (2.0 * s6 * s6 - s6) / r;
}

}  // namespace

double PairPotential::energy(double r) const noexcept {
    if (r >= r_cut) {
        return 0.0;
    }
    return lj(epsilon, sigma, r) - lj(epsilon, sigma, r_cut) + (r - r_cut) * lj_force(epsilon, sigma, r_cut);
}

double PairPotential::force(double r) const noexcept {
    if (r >= r_cut) {
        return 0.0;
    }
    return lj_force(epsilon, sigma, r) - lj_force(epsilon, sigma, r_cut);
}

double PairPotential::minimum_separation() const {
    validate();
    // force(r) = 0; start at the bare minimum, where force is slightly negative.
    double r = std::pow(2.0, 1.0 / 6.0) * sigma;
    for (int it = 0; it < 100; ++it) {
        const double h = 1e-6 * sigma;
        const double slope = (force(r + h) - force(r - h)) / (2.0 * h);
        const double next = r - force(r) / slope;
        if (std::abs(next - r) < 1e-15 * sigma) {
            return next;
        }
        r = next;
    }
    return r;
}

void PairPotential::validate() const {
    if (!(epsilon > 0.0) || !(sigma > 0.0) || !(r_cut > std::pow(2.0, 1.0 / 6.0) * sigma)) {
        throw std::invalid_argument("pair potential needs epsilon > 0, sigma > 0, r_cut beyond the minimum");
    }
}

ForceResult forces(const ParticleSystem& system, const PairPotential& potential) {
    const std::size_t n = system.size();
    ForceResult out{std::vector<Vec3>(n), 0.0};
    const double rc2 = potential.r_cut * potential.r_cut;
    const double sigma2 = potential.sigma * potential.sigma;
    const double four_eps = 4.0 * potential.epsilon;
    const double twentyfour_eps = 24.0 * potential.epsilon;
    const double u_cut = lj(potential.epsilon, potential.sigma, potential.r_cut);
    const double f_cut = lj_force(potential.epsilon, potential.sigma, potential.r_cut);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const Vec3 d = system.positions[i] - system.positions[j];
            const double r2 = dot(d, d);
            if (r2 >= rc2) {
                continue;
            }
            const double r = std::sqrt(r2);
            if (r < PairPotential::hard_floor) {
                throw DegenerateConfiguration(i, j, r);
            }
            const double s2 = sigma2 / r2;
            const double s6 = s2 * s2 * s2;
            out.potential += four_eps * (s6 * s6 - s6) - u_cut + (r - potential.r_cut) * f_cut;
            const double f_mag = twentyfour_eps * (2.0 * s6 * s6 - s6) / r - f_cut;
            const Vec3 f = d * (f_mag / r);
            out.forces[i] += f;
            out.forces[j] -= f;
        }
    }
    return out;
}

double potential_energy(const ParticleSystem& system, const PairPotential& potential) {
    return forces(system, potential).potential;
}

double total_energy(const ParticleSystem& system, const PairPotential& potential) {
    return system.kinetic_energy() + potential_energy(system, potential);
}

VelocityVerlet::VelocityVerlet(const ParticleSystem& system, const PairPotential& potential, double dt)
    : potential_fn_(potential), dt_(dt) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("time step must be positive");
    }
    compute(system);
}

void VelocityVerlet::compute(const ParticleSystem& system) {
    auto result = forces(system, potential_fn_);
    forces_ = std::move(result.forces);
    potential_ = result.potential;
    if (wall_radius_ > 0.0) {
        for (std::size_t i = 0; i < system.size(); ++i) {
            const double r = norm(system.positions[i]);
            if (r > wall_radius_) {
                const double excess = r - wall_radius_;
                potential_ += 0.5 * wall_stiffness_ * excess * excess;
                forces_[i] -= system.positions[i] * (wall_stiffness_ * excess / r);
            }
        }
    }
}

void VelocityVerlet::step(ParticleSystem& system) {
    const std::size_t n = system.size();
    const double half = 0.5 * dt_;
    for (std::size_t i = 0; i < n; ++i) {
        system.velocities[i] += forces_[i] * (half / system.masses[i]);
        system.positions[i] += system.velocities[i] * dt_;
    }
    compute(system);
    for (std::size_t i = 0; i < n; ++i) {
        system.velocities[i] += forces_[i] * (half / system.masses[i]);
    }
}

void VelocityVerlet::set_wall(double radius, double stiffness) {
    wall_radius_ = radius;
    wall_stiffness_ = stiffness;
}

void VelocityVerlet::clear_wall() {
    wall_radius_ = 0.0;
    wall_stiffness_ = 0.0;
}

void verlet_step(ParticleSystem& system, const PairPotential& potential, double dt) {
    VelocityVerlet integrator(system, potential, dt);
    integrator.step(system);
}

BindingFailure::BindingFailure(const std::string& what, double e, std::size_t s)
    : std::runtime_error(what), energy_per_particle(e), steps(s) {}

namespace {

void recenter(ParticleSystem& s) {
    s.translate(-s.center_of_mass());
    s.boost(-s.center_of_mass_velocity());
}

void scale_kinetic(ParticleSystem& s, double kinetic_per_particle) {
    const double k = s.kinetic_energy() / static_cast<double>(s.size());
    if (k > 0.0) {
        const double f = std::sqrt(kinetic_per_particle / k);
        for (auto& v : s.velocities) {
            v *= f;
        }
    }
}

}  // namespace

Droplet prepare_droplet(std::size_t n_particles, double target, const PairPotential& potential, RngStream& rng,
                        const DropletOptions& options) {
    if (n_particles < 2) {
        throw std::invalid_argument("a droplet needs at least two particles");
    }
    potential.validate();
    const double n = static_cast<double>(n_particles);
    const double radius =
        std::max(potential.sigma, std::cbrt(3.0 * n / (4.0 * std::numbers::pi * options.density)) * potential.sigma);

    Droplet out;
    ParticleSystem& s = out.system;
    double min_sep = 0.9 * potential.sigma;
    std::size_t attempts = 0;
    while (s.size() < n_particles) {
        const Vec3 r{(2.0 * rng.uniform() - 1.0) * radius, (2.0 * rng.uniform() - 1.0) * radius,
                     (2.0 * rng.uniform() - 1.0) * radius};
        if (norm(r) > radius) {
            continue;
        }
        bool clear = true;
        for (const auto& q : s.positions) {
            if (norm(r - q) < min_sep) {
                clear = false;
                break;
            }
        }
        if (++attempts % 10000 == 0) {
            min_sep *= 0.9;
        }
        if (clear) {
            s.add(r, {2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0});
        }
    }
    recenter(s);
    scale_kinetic(s, options.initial_kinetic);

    VelocityVerlet integrator(s, potential, options.dt);
    integrator.set_wall(1.25 * radius, options.wall_stiffness);
    auto kinetic = [&] { return s.kinetic_energy() / n; };
    auto cool = [&] {
        for (auto& v : s.velocities) {
            v *= options.cooling_factor;
        }
    };

    std::size_t steps = 0;
    while (kinetic() > options.confined_kinetic) {
        if (steps >= options.max_steps) {
            throw BindingFailure("droplet did not cool inside the confining sphere", (s.kinetic_energy() + integrator.potential()) / n,
                                 steps);
        }
        integrator.step(s);
        if (++steps % options.cooling_interval == 0) {
            cool();
        }
    }
    integrator.clear_wall();
    recenter(s);
    integrator = VelocityVerlet(s, potential, options.dt);

    auto energy = [&] { return (s.kinetic_energy() + integrator.potential()) / n; };
    while (!(energy() <= target && energy() < 0.0)) {
        if (steps >= options.max_steps) {
            throw BindingFailure("droplet did not reach the target binding within the step budget", energy(), steps);
        }
        integrator.step(s);
        if (++steps % options.cooling_interval == 0) {
            cool();
            if (kinetic() < options.stuck_kinetic) {
                scale_kinetic(s, options.reheat_kinetic);
                ++out.reheats;
            }
        }
    }
    recenter(s);
    if (geometric_fragment_sizes(s, potential.r_cut).size() != 1) {
        throw BindingFailure("droplet lost particles while cooling", energy(), steps);
    }
    out.energy = total_energy(s, potential);
    out.steps = steps;
    return out;
}

namespace {

std::string fmt_double(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

double parse_double(std::string_view text) {
    while (!text.empty() && text.front() == ' ') {
        text.remove_prefix(1);
    }
    while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw std::runtime_error("snapshot: cannot parse number '" + std::string(text) + "'");
    }
    return x;
}

std::string header_value(std::istream& in, std::string_view key) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("snapshot: missing header line '" + std::string(key) + "'");
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || line.substr(0, eq).find(key) == std::string::npos) {
        throw std::runtime_error("snapshot: expected '" + std::string(key) + " = ...', got '" + line + "'");
    }
    return line.substr(eq + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) {
            return out;
        }
        start = pos + 1;
    }
}

}  // namespace

void write_snapshot(std::ostream& out, const Snapshot& snap) {
    const auto& s = snap.system;
    out << "time = " << fmt_double(snap.time) << '\n';
    out << "n = " << s.size() << '\n';
    out << "energy = " << fmt_double(snap.energy) << '\n';
    out << "momentum = " << fmt_double(snap.momentum.x) << ' ' << fmt_double(snap.momentum.y) << ' '
        << fmt_double(snap.momentum.z) << '\n';
    out << "id,species,m,x,y,z,vx,vy,vz\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& r = s.positions[i];
        const auto& v = s.velocities[i];
        out << i << ',' << s.species[i] << ',' << fmt_double(s.masses[i]) << ',' << fmt_double(r.x) << ','
            << fmt_double(r.y) << ',' << fmt_double(r.z) << ',' << fmt_double(v.x) << ',' << fmt_double(v.y) << ','
            << fmt_double(v.z) << '\n';
    }
}

Snapshot read_snapshot(std::istream& in) {
    Snapshot snap;
    snap.time = parse_double(header_value(in, "time"));
    const double count = parse_double(header_value(in, "n"));
    if (count < 0 || count != std::floor(count)) {
        throw std::runtime_error("snapshot: bad particle count");
    }
    const auto n = static_cast<std::size_t>(count);
    snap.energy = parse_double(header_value(in, "energy"));
    {
        std::istringstream mom(header_value(in, "momentum"));
        std::string a, b, c;
        if (!(mom >> a >> b >> c)) {
            throw std::runtime_error("snapshot: momentum needs three components");
        }
        snap.momentum = {parse_double(a), parse_double(b), parse_double(c)};
    }
    std::string line;
    if (!std::getline(in, line) || line.rfind("id,species", 0) != 0) {
        throw std::runtime_error("snapshot: missing column header");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) {
            throw std::runtime_error("snapshot: expected " + std::to_string(n) + " particle lines");
        }
        const auto f = split(line, ',');
        if (f.size() != 9) {
            throw std::runtime_error("snapshot: particle line needs 9 fields: '" + line + "'");
        }
        snap.system.add({parse_double(f[3]), parse_double(f[4]), parse_double(f[5])},
                        {parse_double(f[6]), parse_double(f[7]), parse_double(f[8])}, parse_double(f[2]),
                        std::string(f[1]));
    }
    snap.system.validate();
    return snap;
}

EnergyDriftError::EnergyDriftError(double d, double t, double dt)
    : std::runtime_error("relative energy drift " + std::to_string(d) + " at t = " + std::to_string(t) +
                         " exceeds the bound; retry with dt = " + std::to_string(dt)),
      drift(d),
      time(t),
      suggested_dt(dt) {}

namespace {

double extent(const ParticleSystem& s) {
    const Vec3 c = s.center_of_mass();
    double r = 0.0;
    for (const auto& p : s.positions) {
        r = std::max(r, norm(p - c));
    }
    return r;
}

}  // namespace

CollisionResult collide(const ParticleSystem& projectile, const ParticleSystem& target, double beam_energy,
                        double impact_parameter, const PairPotential& potential, const CollisionOptions& options) {
    if (projectile.size() == 0 || target.size() == 0) {
        throw std::invalid_argument("both droplets need particles");
    }
    if (beam_energy < 0.0 || !(options.dt > 0.0) || options.t_end < 0.0) {
        throw std::invalid_argument("beam energy and t_end must be non-negative, dt positive");
    }
    ParticleSystem a = projectile;
    ParticleSystem b = target;
    a.translate(-a.center_of_mass());
    b.translate(-b.center_of_mass());
    a.boost(-a.center_of_mass_velocity());
    b.boost(-b.center_of_mass_velocity());
    const double separation = extent(a) + extent(b) + potential.r_cut + options.gap;
    a.translate({-separation, impact_parameter, 0.0});
    const double speed = std::sqrt(2.0 * beam_energy * static_cast<double>(a.size()) / a.total_mass());
    a.boost({speed, 0.0, 0.0});

    ParticleSystem s = merge(a, b);
    s.validate();
    s.boost(-s.center_of_mass_velocity());
    s.translate(-s.center_of_mass());

    VelocityVerlet integrator(s, potential, options.dt);
    CollisionResult out;
    out.initial_energy = s.kinetic_energy() + integrator.potential();
    const double scale = std::abs(out.initial_energy);
    auto snapshot = [&](double t, double e) { out.snapshots.push_back({t, s, e, s.momentum()}); };
    snapshot(0.0, out.initial_energy);

    const auto steps = static_cast<std::size_t>(std::llround(options.t_end / options.dt));
    const std::size_t stride = std::max<std::size_t>(1, options.snapshot_stride);
    for (std::size_t k = 1; k <= steps; ++k) {
        integrator.step(s);
        const double e = s.kinetic_energy() + integrator.potential();
        const double drift = scale > 0.0 ? std::abs(e - out.initial_energy) / scale : std::abs(e);
        out.max_drift = std::max(out.max_drift, drift);
        const double t = static_cast<double>(k) * options.dt;
        if (drift > options.max_drift) {
            throw EnergyDriftError(drift, t, options.dt / 2.0);
        }
        if (k % stride == 0 || k == steps) {
            snapshot(t, e);
        }
    }
    return out;
}

std::vector<std::size_t> geometric_fragment_sizes(const ParticleSystem& system, double radius) {
    const std::size_t n = system.size();
    const double r2 = radius * radius;
    const auto partition = label_clusters(
        n,
        [n](std::size_t i, auto&& visit) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) {
                    visit(j);
                }
            }
        },
        [&](std::size_t i, std::size_t j) {
            const Vec3 d = system.positions[i] - system.positions[j];
            return dot(d, d) < r2;
        });
    return partition.sizes_descending();
}

}  // namespace critlab::md
