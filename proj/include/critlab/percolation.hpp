#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "critlab/clusters.hpp"
#include "critlab/lattice.hpp"
#include "critlab/rng.hpp"

namespace critlab::perc {

enum class Mode { Bond, Site };

/// Percolation lattice geometry: open along x (the spanning axis), periodic
/// along y and z.
LatticeGeometry spanning_geometry(std::array<std::size_t, 3> dims);

/// One percolation configuration.
///
/// Bond mode: `open[3 * site + axis]` is the bond from `site` to its +axis
/// neighbor; slots for bonds that would leave an open face stay closed and
/// are not counted. Site mode: `open[site]` marks occupied sites, and all
/// bonds between occupied neighbors are open.
struct Config {
    LatticeGeometry geometry;
    Mode mode = Mode::Bond;
    double p = 0.0;
    std::vector<std::uint8_t> open;

    /// Number of bond (or site) slots that can be opened.
    std::size_t slot_count() const noexcept;
    std::size_t open_count() const noexcept;
};

/// One uniform per slot; reusing the same draws at several p couples the
/// configurations monotonically.
std::vector<double> draw_uniforms(const LatticeGeometry& geometry, Mode mode, RngStream& rng);

/// Opens slot k iff uniforms[k] < p. Throws std::invalid_argument for p outside [0, 1].
Config config_from_uniforms(const LatticeGeometry& geometry, Mode mode, double p,
                            const std::vector<double>& uniforms);

/// Samples a configuration, each slot open independently with probability p.
Config sample_config(const LatticeGeometry& geometry, double p, RngStream& rng, Mode mode = Mode::Bond);

/// Clusters of the configuration. In site mode, empty sites are unassigned.
ClusterPartition label(const Config& config);

struct Spanning {
    bool spanning = false;
    std::optional<std::size_t> cluster;  ///< label of the largest spanning cluster
    std::size_t size = 0;
};

/// Whether a cluster touches both the x = 0 and x = Lx - 1 faces. The x axis
/// must be Open.
Spanning spanning_cluster(const Config& config);
Spanning spanning_cluster(const Config& config, const ClusterPartition& clusters);

struct PercoStats {
    std::map<std::size_t, double> n_s;                 ///< clusters of size s per lattice site
    std::map<std::size_t, std::size_t> cluster_counts;  ///< raw counts behind n_s
    double p_inf = 0.0;          ///< spanning cluster size / sites
    double second_moment = 0.0;  ///< sum over s of s^2 n_s
    bool spanning = false;
    std::size_t largest = 0;      ///< largest cluster size, spanning or not
    std::size_t excluded = 0;     ///< size removed from n_s (spanning cluster)
    std::size_t n_sites = 0;
};

PercoStats compute_stats(const Config& config, bool exclude_spanning);
PercoStats compute_stats(const Config& config, const ClusterPartition& clusters, bool exclude_spanning);

struct ThresholdRow {
    double p = 0.0;
    double spanning_prob = 0.0, spanning_prob_se = 0.0;
    double p_inf = 0.0, p_inf_se = 0.0;
    double second_moment = 0.0, second_moment_se = 0.0;
    double largest_fraction = 0.0, largest_fraction_se = 0.0;
};

struct ThresholdScan {
    std::vector<ThresholdRow> rows;
    /// Linear interpolation of the p where spanning probability first crosses 0.5.
    std::optional<double> p_c;
    std::size_t n_samples = 0;
};

/// Monte Carlo estimates on a grid of p. Sample k uses substream(rng, k) and
/// the same uniforms at every p. Spanning cluster is excluded from S.
ThresholdScan threshold_scan(std::array<std::size_t, 3> dims, const std::vector<double>& p_grid,
                             std::size_t n_samples, const RngStream& rng, Mode mode = Mode::Bond);

/// Interpolated 0.5 crossing of a spanning-probability curve.
std::optional<double> crossing(const std::vector<ThresholdRow>& rows, double level = 0.5);

/// tau = 2 + beta / (beta + gamma)
double tau_from_beta_gamma(double beta, double gamma);
/// sigma = 1 / (beta + gamma)
double sigma_from_beta_gamma(double beta, double gamma);

}  // namespace critlab::perc
