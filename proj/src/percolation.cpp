#include "critlab/percolation.hpp"

#include <stdexcept>

#include "critlab/parallel.hpp"
#include "critlab/stats.hpp"

namespace critlab::perc {

LatticeGeometry spanning_geometry(std::array<std::size_t, 3> dims) {
    return LatticeGeometry(dims, {Boundary::Open, Boundary::Periodic, Boundary::Periodic});
}

std::size_t Config::slot_count() const noexcept {
    return mode == Mode::Bond ? geometry.bond_count() : geometry.size();
}

std::size_t Config::open_count() const noexcept {
    std::size_t n = 0;
    for (auto b : open) {
        n += b;
    }
    return n;
}

std::vector<double> draw_uniforms(const LatticeGeometry& geometry, Mode mode, RngStream& rng) {
    const std::size_t n = mode == Mode::Bond ? 3 * geometry.size() : geometry.size();
    std::vector<double> u(n);
    for (auto& x : u) {
        x = rng.uniform();
    }
    return u;
}

Config config_from_uniforms(const LatticeGeometry& geometry, Mode mode, double p,
                            const std::vector<double>& uniforms) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("bond probability must lie in [0, 1]");
    }
    Config config{geometry, mode, p, {}};
    const std::size_t n = geometry.size();
    if (mode == Mode::Site) {
        if (uniforms.size() != n) {
            throw std::invalid_argument("site mode needs one uniform per site");
        }
        config.open.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            config.open[i] = uniforms[i] < p;
        }
        return config;
    }
    if (uniforms.size() != 3 * n) {
        throw std::invalid_argument("bond mode needs three uniforms per site");
    }
    config.open.assign(3 * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (int axis = 0; axis < 3; ++axis) {
            if (geometry.forward(i, axis)) {
                config.open[3 * i + axis] = uniforms[3 * i + axis] < p;
            }
        }
    }
    return config;
}

Config sample_config(const LatticeGeometry& geometry, double p, RngStream& rng, Mode mode) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("bond probability must lie in [0, 1]");
    }
    return config_from_uniforms(geometry, mode, p, draw_uniforms(geometry, mode, rng));
}

ClusterPartition label(const Config& config) {
    const auto& g = config.geometry;
    const std::size_t n = g.size();
    UnionFind forest(n);
    if (config.mode == Mode::Bond) {
        for (std::size_t i = 0; i < n; ++i) {
            for (int axis = 0; axis < 3; ++axis) {
                if (config.open[3 * i + axis]) {
                    forest.unite(i, *g.forward(i, axis));
                }
            }
        }
        return partition_from(forest, [](std::size_t) { return true; });
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!config.open[i]) {
            continue;
        }
        for (int axis = 0; axis < 3; ++axis) {
            if (auto j = g.forward(i, axis); j && config.open[*j]) {
                forest.unite(i, *j);
            }
        }
    }
    return partition_from(forest, [&](std::size_t i) { return config.open[i] != 0; });
}

Spanning spanning_cluster(const Config& config) { return spanning_cluster(config, label(config)); }

Spanning spanning_cluster(const Config& config, const ClusterPartition& clusters) {
    const auto& g = config.geometry;
    if (g.boundary()[0] != Boundary::Open) {
        throw std::invalid_argument("spanning detection needs an open x axis");
    }
    const auto [lx, ly, lz] = g.dims();
    std::vector<std::uint8_t> touches(g.size(), 0);
    for (std::size_t z = 0; z < lz; ++z) {
        for (std::size_t y = 0; y < ly; ++y) {
            if (auto l = clusters.labels[g.index(0, y, z)]; l != ClusterPartition::unassigned) {
                touches[l] |= 1;
            }
            if (auto l = clusters.labels[g.index(lx - 1, y, z)]; l != ClusterPartition::unassigned) {
                touches[l] |= 2;
            }
        }
    }
    Spanning best;
    for (const auto& c : clusters.clusters) {
        if (touches[c.label] == 3 && c.size > best.size) {
            best = {true, c.label, c.size};
        }
    }
    return best;
}

PercoStats compute_stats(const Config& config, bool exclude_spanning) {
    return compute_stats(config, label(config), exclude_spanning);
}

PercoStats compute_stats(const Config& config, const ClusterPartition& clusters, bool exclude_spanning) {
    PercoStats stats;
    stats.n_sites = config.geometry.size();
    stats.cluster_counts = clusters.size_histogram();
    stats.largest = clusters.largest().size;
    const Spanning span = spanning_cluster(config, clusters);
    stats.spanning = span.spanning;
    const auto n = static_cast<double>(stats.n_sites);
    if (span.spanning) {
        stats.p_inf = static_cast<double>(span.size) / n;
        if (exclude_spanning) {
            stats.excluded = span.size;
            if (--stats.cluster_counts[span.size] == 0) {
                stats.cluster_counts.erase(span.size);
            }
        }
    }
    for (const auto& [s, count] : stats.cluster_counts) {
        const double ns = static_cast<double>(count) / n;
        stats.n_s[s] = ns;
        stats.second_moment += static_cast<double>(s) * static_cast<double>(s) * ns;
    }
    return stats;
}

std::optional<double> crossing(const std::vector<ThresholdRow>& rows, double level) {
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const double a = rows[i].spanning_prob;
        const double b = rows[i + 1].spanning_prob;
        if (a < level && b >= level) {
            const double t = (level - a) / (b - a);
            return rows[i].p + t * (rows[i + 1].p - rows[i].p);
        }
    }
    if (!rows.empty() && rows.front().spanning_prob == level) {
        return rows.front().p;
    }
    return std::nullopt;
}

ThresholdScan threshold_scan(std::array<std::size_t, 3> dims, const std::vector<double>& p_grid,
                             std::size_t n_samples, const RngStream& rng, Mode mode) {
    if (n_samples == 0) {
        throw std::invalid_argument("threshold scan needs at least one sample");
    }
    for (std::size_t i = 0; i < p_grid.size(); ++i) {
        if (!(p_grid[i] >= 0.0 && p_grid[i] <= 1.0)) {
            throw std::invalid_argument("bond probability must lie in [0, 1]");
        }
        if (i > 0 && p_grid[i] < p_grid[i - 1]) {
            throw std::invalid_argument("p grid must be sorted ascending");
        }
    }
    const LatticeGeometry geometry = spanning_geometry(dims);
    const std::size_t np = p_grid.size();
    // [sample][p][quantity]
    std::vector<double> samples(n_samples * np * 4);
    parallel_for(n_samples, [&](std::size_t k) {
        RngStream stream = substream(rng, k);
        const auto uniforms = draw_uniforms(geometry, mode, stream);
        for (std::size_t ip = 0; ip < np; ++ip) {
            const Config config = config_from_uniforms(geometry, mode, p_grid[ip], uniforms);
            const PercoStats st = compute_stats(config, true);
            double* out = &samples[(k * np + ip) * 4];
            out[0] = st.spanning ? 1.0 : 0.0;
            out[1] = st.p_inf;
            out[2] = st.second_moment;
            out[3] = static_cast<double>(st.largest) / static_cast<double>(st.n_sites);
        }
    });
    ThresholdScan scan;
    scan.n_samples = n_samples;
    for (std::size_t ip = 0; ip < np; ++ip) {
        RunningStats acc[4];
        for (std::size_t k = 0; k < n_samples; ++k) {
            for (int q = 0; q < 4; ++q) {
                acc[q].add(samples[(k * np + ip) * 4 + q]);
            }
        }
        scan.rows.push_back({p_grid[ip], acc[0].mean(), acc[0].se(), acc[1].mean(), acc[1].se(),
                             acc[2].mean(), acc[2].se(), acc[3].mean(), acc[3].se()});
    }
    scan.p_c = crossing(scan.rows);
    return scan;
}

double tau_from_beta_gamma(double beta, double gamma) {
    if (beta + gamma == 0.0) {
        throw std::invalid_argument("beta + gamma must be nonzero");
    }
    return 2.0 + beta / (beta + gamma);
}

double sigma_from_beta_gamma(double beta, double gamma) {
    if (beta + gamma == 0.0) {
        throw std::invalid_argument("beta + gamma must be nonzero");
    }
    return 1.0 / (beta + gamma);
}

}  // namespace critlab::perc
