#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <set>

namespace oracle {

namespace {

constexpr std::size_t none = std::numeric_limits<std::size_t>::max();

using critlab::Boundary;
using critlab::md::Vec3;

// Distinct coordinate neighbors of a site: the +/- step along each axis,
// wrapped when the axis is periodic and longer than 2, dropped off open faces.
std::vector<std::size_t> grid_neighbors(std::size_t site, const std::array<std::size_t, 3>& dims,
                                        const std::array<Boundary, 3>& boundary) {
    const std::array<std::size_t, 3> c{site % dims[0], (site / dims[0]) % dims[1], site / (dims[0] * dims[1])};
    std::set<std::size_t> out;
    for (int a = 0; a < 3; ++a) {
        const long L = static_cast<long>(dims[a]);
        for (long d : {-1L, 1L}) {
            long v = static_cast<long>(c[a]) + d;
            if (v < 0 || v >= L) {
                if (boundary[a] != Boundary::Periodic || L <= 2) {
                    continue;
                }
                v = (v + L) % L;
            }
            auto n = c;
            n[a] = static_cast<std::size_t>(v);
            const std::size_t j = n[0] + dims[0] * (n[1] + dims[1] * n[2]);
            if (j != site) {
                out.insert(j);
            }
        }
    }
    return {out.begin(), out.end()};
}

double lj_u(double r, double eps, double sigma) {
    const double s6 = std::pow(sigma / r, 6);
    return 4.0 * eps * (s6 * s6 - s6);
}

double lj_du(double r, double eps, double sigma) {
    const double s6 = std::pow(sigma / r, 6);
    return 4.0 * eps * (-12.0 * s6 * s6 + 6.0 * s6) / r;
}

double distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Gradient of lj_total written from dV/dr directly.
std::vector<Vec3> lj_gradient(const std::vector<Vec3>& x) {
    std::vector<Vec3> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double r = distance(x[i], x[j]);
            if (r >= 3.0) {
                continue;
            }
            const double dv = lj_du(r, 1.0, 1.0) - lj_du(3.0, 1.0, 1.0);
            const Vec3 d = (x[i] - x[j]) * (dv / r);
            g[i] += d;
            g[j] -= d;
        }
    }
    return g;
}

// Steepest descent with an adaptive step; returns the quenched energy.
double quench(std::vector<Vec3>& x) {
    double e = lj_total(x);
    double step = 1e-3;
    for (int it = 0; it < 20000; ++it) {
        const auto g = lj_gradient(x);
        double gmax = 0.0;
        for (const auto& v : g) {
            gmax = std::max({gmax, std::abs(v.x), std::abs(v.y), std::abs(v.z)});
        }
        if (gmax < 1e-7) {
            break;
        }
        while (true) {
            std::vector<Vec3> trial = x;
            for (std::size_t i = 0; i < x.size(); ++i) {
                trial[i] -= g[i] * step;
            }
            const double et = lj_total(trial);
            if (et < e) {
                x = std::move(trial);
                e = et;
                step *= 1.2;
                break;
            }
            step *= 0.5;
            if (step < 1e-14) {
                return e;
            }
        }
    }
    return e;
}

}  // namespace

std::vector<std::size_t> flood_fill(std::size_t n,
                                    const std::function<std::vector<std::size_t>(std::size_t)>& neighbors,
                                    const std::function<bool(std::size_t, std::size_t)>& connected,
                                    const std::function<bool(std::size_t)>& included) {
    std::vector<std::size_t> label(n, none);
    for (std::size_t start = 0; start < n; ++start) {
        if (label[start] != none || !included(start)) {
            continue;
        }
        // Visiting starts in index order, so the first member is the smallest.
        label[start] = start;
        std::deque<std::size_t> queue{start};
        while (!queue.empty()) {
            const std::size_t i = queue.front();
            queue.pop_front();
            for (std::size_t j : neighbors(i)) {
                if (label[j] == none && included(j) && connected(i, j)) {
                    label[j] = start;
                    queue.push_back(j);
                }
            }
        }
    }
    return label;
}

std::vector<std::size_t> percolation_labels(const critlab::perc::Config& config) {
    const auto dims = config.geometry.dims();
    const std::array<Boundary, 3> bc{Boundary::Open, Boundary::Periodic, Boundary::Periodic};
    const std::size_t n = dims[0] * dims[1] * dims[2];
    std::vector<std::vector<std::size_t>> adjacency(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::array<std::size_t, 3> c{i % dims[0], (i / dims[0]) % dims[1], i / (dims[0] * dims[1])};
        for (int a = 0; a < 3; ++a) {
            auto f = c;
            if (c[a] + 1 < dims[a]) {
                f[a] = c[a] + 1;
            } else if (bc[a] == Boundary::Periodic && dims[a] > 2) {
                f[a] = 0;
            } else {
                continue;
            }
            const std::size_t j = f[0] + dims[0] * (f[1] + dims[1] * f[2]);
            const bool open = config.mode == critlab::perc::Mode::Bond ? config.open[3 * i + a] != 0
                                                                        : config.open[i] && config.open[j];
            if (open) {
                adjacency[i].push_back(j);
                adjacency[j].push_back(i);
            }
        }
    }
    return flood_fill(
        n, [&](std::size_t i) { return adjacency[i]; }, [](std::size_t, std::size_t) { return true; },
        [&](std::size_t i) { return config.mode == critlab::perc::Mode::Bond || config.open[i] != 0; });
}

std::vector<std::size_t> hypercube_labels(const std::vector<critlab::hiv::SiteState>& states, unsigned n) {
    return flood_fill(
        states.size(),
        [n](std::size_t i) {
            std::vector<std::size_t> out;
            for (unsigned b = 0; b < n; ++b) {
                out.push_back(i ^ (std::size_t{1} << b));
            }
            return out;
        },
        [](std::size_t, std::size_t) { return true; },
        [&](std::size_t i) { return states[i] == critlab::hiv::SiteState::Infected; });
}

std::vector<std::size_t> spin_domain_labels(const critlab::spin::SpinLattice& s) {
    const auto& g = s.lattice.geometry();
    return flood_fill(
        g.size(), [&](std::size_t i) { return grid_neighbors(i, g.dims(), g.boundary()); },
        [&](std::size_t i, std::size_t j) { return s.lattice[i] == s.lattice[j]; },
        [&](std::size_t i) { return s.lattice[i] != 0; });
}

std::map<std::size_t, std::size_t> label_histogram(const std::vector<std::size_t>& labels) {
    std::map<std::size_t, std::size_t> per_label;
    for (auto l : labels) {
        if (l != none) {
            ++per_label[l];
        }
    }
    std::map<std::size_t, std::size_t> out;
    for (const auto& [l, size] : per_label) {
        ++out[size];
    }
    return out;
}

double spin_energy_all_pairs(const critlab::spin::SpinLattice& s) {
    const auto& g = s.lattice.geometry();
    const auto dims = g.dims();
    const auto bc = g.boundary();
    auto coord = [&](std::size_t i) {
        return std::array<long, 3>{static_cast<long>(i % dims[0]), static_cast<long>((i / dims[0]) % dims[1]),
                                   static_cast<long>(i / (dims[0] * dims[1]))};
    };
    double bonds = 0.0, field = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        field += s.lattice[i];
        for (std::size_t j = i + 1; j < g.size(); ++j) {
            const auto a = coord(i), b = coord(j);
            int unit_axes = 0, zero_axes = 0;
            for (int k = 0; k < 3; ++k) {
                const long L = static_cast<long>(dims[k]);
                long d = std::abs(a[k] - b[k]);
                if (bc[k] == Boundary::Periodic && L > 2) {
                    d = std::min(d, L - d);
                }
                zero_axes += d == 0;
                unit_axes += d == 1;
            }
            if (unit_axes == 1 && zero_axes == 2) {
                bonds += s.lattice[i] * s.lattice[j];
            }
        }
    }
    return -s.J * bonds - s.h * field;
}

std::vector<double> chain_boltzmann(std::size_t sites, double J, double h, double T) {
    std::size_t states = 1;
    for (std::size_t i = 0; i < sites; ++i) {
        states *= 3;
    }
    std::vector<double> w(states);
    double z = 0.0;
    for (std::size_t k = 0; k < states; ++k) {
        std::vector<int> spin(sites);
        std::size_t rest = k;
        for (std::size_t i = 0; i < sites; ++i) {
            spin[i] = static_cast<int>(rest % 3) - 1;
            rest /= 3;
        }
        double e = 0.0;
        for (std::size_t i = 0; i < sites; ++i) {
            e -= h * spin[i];
            if (i + 1 < sites) {
                e -= J * spin[i] * spin[i + 1];
            }
        }
        w[k] = std::exp(-e / T);
        z += w[k];
    }
    for (auto& v : w) {
        v /= z;
    }
    return w;
}

double normalization_compensated(double tau, std::size_t a_system) {
    long double sum = 0.0L, c = 0.0L;
    for (std::size_t a = 1; a <= a_system; ++a) {
        const long double term = std::pow(static_cast<long double>(a), 1.0L - static_cast<long double>(tau));
        const long double t = sum + term;
        if (std::abs(sum) >= std::abs(term)) {
            c += (sum - t) + term;
        } else {
            c += (term - t) + sum;
        }
        sum = t;
    }
    return static_cast<double>(1.0L / (sum + c));
}

double lj_shifted_force(double r, double eps, double sigma, double rc) {
    if (r >= rc) {
        return 0.0;
    }
    return lj_u(r, eps, sigma) - lj_u(rc, eps, sigma) - (r - rc) * lj_du(rc, eps, sigma);
}

std::map<std::size_t, double> cluster_energies(const critlab::md::ParticleSystem& system,
                                               const std::vector<std::size_t>& assignment) {
    std::map<std::size_t, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        members[assignment[i]].push_back(i);
    }
    std::map<std::size_t, double> out;
    for (const auto& [id, idx] : members) {
        double m = 0.0;
        Vec3 p;
        for (auto i : idx) {
            m += system.masses[i];
            p += system.velocities[i] * system.masses[i];
        }
        const Vec3 vcm = p * (1.0 / m);
        double e = 0.0;
        for (auto i : idx) {
            const Vec3 u = system.velocities[i] - vcm;
            e += 0.5 * system.masses[i] * (u.x * u.x + u.y * u.y + u.z * u.z);
        }
        for (std::size_t a = 0; a < idx.size(); ++a) {
            for (std::size_t b = a + 1; b < idx.size(); ++b) {
                e += lj_shifted_force(distance(system.positions[idx[a]], system.positions[idx[b]]));
            }
        }
        out[id] = e;
    }
    return out;
}

double lj_total(const std::vector<Vec3>& positions) {
    double e = 0.0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        for (std::size_t j = i + 1; j < positions.size(); ++j) {
            e += lj_shifted_force(distance(positions[i], positions[j]));
        }
    }
    return e;
}

std::vector<Vec3> finite_difference_forces(const std::vector<Vec3>& positions, double h) {
    std::vector<Vec3> f(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        for (int a = 0; a < 3; ++a) {
            auto plus = positions, minus = positions;
            double* p = a == 0 ? &plus[i].x : a == 1 ? &plus[i].y : &plus[i].z;
            double* m = a == 0 ? &minus[i].x : a == 1 ? &minus[i].y : &minus[i].z;
            *p += h;
            *m -= h;
            const double d = -(lj_total(plus) - lj_total(minus)) / (2.0 * h);
            (a == 0 ? f[i].x : a == 1 ? f[i].y : f[i].z) = d;
        }
    }
    return f;
}

double basin_hopping_minimum(std::size_t n, std::size_t hops, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> accept(0.0, 1.0);
    // Random start inside a sphere at roughly liquid density.
    const double radius = std::cbrt(static_cast<double>(n) / 0.9 * 3.0 / (4.0 * 3.14159265358979));
    std::vector<Vec3> x;
    while (x.size() < n) {
        Vec3 c{unit(gen) * radius, unit(gen) * radius, unit(gen) * radius};
        if (c.x * c.x + c.y * c.y + c.z * c.z > radius * radius) {
            continue;
        }
        bool clear = true;
        for (const auto& o : x) {
            clear = clear && distance(o, c) > 0.85;
        }
        if (clear) {
            x.push_back(c);
        }
    }
    double e = quench(x);
    double best = e;
    const double temperature = 0.8;
    for (std::size_t k = 0; k < hops; ++k) {
        auto trial = x;
        for (auto& v : trial) {
            v += Vec3{unit(gen), unit(gen), unit(gen)} * 0.4;
        }
        const double et = quench(trial);
        if (et < e || accept(gen) < std::exp(-(et - e) / temperature)) {
            x = std::move(trial);
            e = et;
        }
        best = std::min(best, e);
    }
    return best;
}

std::uint64_t hiv_pack(const critlab::hiv::SequenceSpace& space) {
    std::uint64_t key = 0;
    const std::size_t size = space.size();
    for (std::size_t s = 0; s < size; ++s) {
        key |= static_cast<std::uint64_t>(space.state(static_cast<std::uint32_t>(s))) << (2 * s);
        if (space.has_receptor(static_cast<std::uint32_t>(s))) {
            key |= std::uint64_t{1} << (2 * size + s);
        }
    }
    return key;
}

std::map<std::uint64_t, double> hiv_successors(std::uint64_t state, unsigned n, double q_vs, double q_is) {
    const std::size_t size = std::size_t{1} << n;
    auto site = [&](std::uint64_t st, std::size_t s) { return (st >> (2 * s)) & 3u; };
    auto set_site = [&](std::uint64_t st, std::size_t s, std::uint64_t v) {
        return (st & ~(std::uint64_t{3} << (2 * s))) | (v << (2 * s));
    };
    auto receptor = [&](std::uint64_t st, std::size_t s) { return ((st >> (2 * size + s)) & 1u) != 0; };
    auto with_receptor = [&](std::uint64_t st, std::size_t s) { return st | (std::uint64_t{1} << (2 * size + s)); };

    std::vector<std::size_t> infected, receptors;
    for (std::size_t s = 0; s < size; ++s) {
        if (site(state, s) == 1) {
            infected.push_back(s);
        }
        if (receptor(state, s)) {
            receptors.push_back(s);
        }
    }
    std::map<std::uint64_t, double> out;
    if (infected.empty()) {
        out[state] = 1.0;
        return out;
    }
    // Immune half.
    if (receptors.empty()) {
        out[state] += 0.5;
    } else {
        const double pick = 0.5 / static_cast<double>(receptors.size());
        for (auto r : receptors) {
            out[state] += pick * q_is;
            for (unsigned b = 0; b < n; ++b) {
                const std::size_t m = r ^ (std::size_t{1} << b);
                std::uint64_t next = with_receptor(state, m);
                if (site(state, m) == 1) {
                    next = set_site(next, m, 2);
                }
                out[next] += pick * (1.0 - q_is) / n;
            }
        }
    }
    // Viral half.
    const double pick = 0.5 / static_cast<double>(infected.size());
    for (auto v : infected) {
        out[state] += pick * q_vs;
        for (unsigned b = 0; b < n; ++b) {
            const std::size_t m = v ^ (std::size_t{1} << b);
            std::uint64_t next = state;
            if (site(state, m) == 0) {
                next = with_receptor(set_site(state, m, 1), m);
            }
            out[next] += pick * (1.0 - q_vs) / n;
        }
    }
    return out;
}

std::uint64_t bell(unsigned n) {
    // Bell triangle.
    std::vector<std::uint64_t> row{1};
    for (unsigned k = 1; k <= n; ++k) {
        std::vector<std::uint64_t> next{row.back()};
        for (auto v : row) {
            next.push_back(next.back() + v);
        }
        row = std::move(next);
    }
    return row.front();
}

}  // namespace oracle
