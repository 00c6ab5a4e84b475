#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

#include "critlab/lattice.hpp"

namespace critlab {

/// Disjoint-set forest with path halving and union by size.
class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t x) noexcept {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    /// Returns true when two distinct sets were merged.
    bool unite(std::size_t a, std::size_t b) noexcept {
        a = find(a);
        b = find(b);
        if (a == b) {
            return false;
        }
        if (size_[a] < size_[b]) {
            std::swap(a, b);
        }
        parent_[b] = a;
        size_[a] += size_[b];
        return true;
    }

    std::size_t set_size(std::size_t x) noexcept { return size_[find(x)]; }
    std::size_t size() const noexcept { return parent_.size(); }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
};

struct ClusterInfo {
    std::size_t label = 0;
    std::size_t size = 0;
    friend bool operator==(const ClusterInfo&, const ClusterInfo&) = default;
};

/// Labeling of elements into disjoint clusters.
///
/// A cluster's label is the smallest element index it contains. Elements left
/// out of the labeling (for example empty sites) carry `unassigned`.
/// `clusters` is sorted by label, and `n_elements` counts assigned elements only.
struct ClusterPartition {
    static constexpr std::size_t unassigned = std::numeric_limits<std::size_t>::max();

    std::vector<std::size_t> labels;
    std::vector<ClusterInfo> clusters;
    std::size_t n_elements = 0;

    std::size_t cluster_count() const noexcept { return clusters.size(); }

    /// Size of the cluster with `label`, or 0 when no such cluster exists.
    std::size_t size_of(std::size_t label) const noexcept;

    /// Largest cluster; ties go to the smaller label. Empty partition gives {0, 0}.
    ClusterInfo largest() const noexcept;

    /// Number of clusters of each size.
    std::map<std::size_t, std::size_t> size_histogram() const;

    /// Cluster sizes sorted descending.
    std::vector<std::size_t> sizes_descending() const;

    friend bool operator==(const ClusterPartition&, const ClusterPartition&) = default;
};

/// Builds a canonical partition from a union-find forest. Elements for which
/// `included(i)` is false are unassigned.
template <typename Included>
ClusterPartition partition_from(UnionFind& forest, Included&& included) {
    const std::size_t n = forest.size();
    ClusterPartition out;
    out.labels.assign(n, ClusterPartition::unassigned);
    // root -> position in out.clusters
    std::vector<std::size_t> slot(n, ClusterPartition::unassigned);
    for (std::size_t i = 0; i < n; ++i) {
        if (!included(i)) {
            continue;
        }
        const std::size_t root = forest.find(i);
        if (slot[root] == ClusterPartition::unassigned) {
            slot[root] = out.clusters.size();
            out.clusters.push_back({i, 0});
        }
        ClusterInfo& info = out.clusters[slot[root]];
        out.labels[i] = info.label;
        ++info.size;
        ++out.n_elements;
    }
    return out;
}

/// Labels connected components.
///
/// `for_each_neighbor(i, visit)` calls `visit(j)` for each element adjacent to
/// i; `connected(i, j)` decides whether an adjacent pair joins; `included(i)`
/// restricts the labeling to a subset. Adjacency and connectivity must be
/// symmetric. Labels are canonical (smallest member index).
template <typename ForEachNeighbor, typename Connected, typename Included>
ClusterPartition label_clusters(std::size_t n_elements, ForEachNeighbor&& for_each_neighbor,
                                Connected&& connected, Included&& included) {
    UnionFind forest(n_elements);
    for (std::size_t i = 0; i < n_elements; ++i) {
        if (!included(i)) {
            continue;
        }
        for_each_neighbor(i, [&](std::size_t j) {
            if (j > i && included(j) && connected(i, j)) {
                forest.unite(i, j);
            }
        });
    }
    return partition_from(forest, included);
}

template <typename ForEachNeighbor, typename Connected>
ClusterPartition label_clusters(std::size_t n_elements, ForEachNeighbor&& for_each_neighbor,
                                Connected&& connected) {
    return label_clusters(n_elements, for_each_neighbor, connected, [](std::size_t) { return true; });
}

/// Nearest-neighbor clusters on a lattice.
template <typename Connected, typename Included>
ClusterPartition label_lattice(const LatticeGeometry& geometry, Connected&& connected, Included&& included) {
    return label_clusters(
        geometry.size(),
        [&](std::size_t i, auto&& visit) {
            for (std::size_t j : geometry.neighbors(i)) {
                visit(j);
            }
        },
        connected, included);
}

/// Relabels a partition by itself: connected := same label. Used to check
/// idempotence of labelings.
template <typename ForEachNeighbor>
ClusterPartition relabel(const ClusterPartition& partition, ForEachNeighbor&& for_each_neighbor) {
    const auto& labels = partition.labels;
    return label_clusters(
        labels.size(), for_each_neighbor,
        [&](std::size_t i, std::size_t j) { return labels[i] == labels[j]; },
        [&](std::size_t i) { return labels[i] != ClusterPartition::unassigned; });
}

}  // namespace critlab
