#include "critlab/clusters.hpp"

namespace critlab {

std::size_t ClusterPartition::size_of(std::size_t label) const noexcept {
    auto it = std::lower_bound(clusters.begin(), clusters.end(), label,
                               [](const ClusterInfo& c, std::size_t l) { return c.label < l; });
    return it != clusters.end() && it->label == label ? it->size : 0;
}

ClusterInfo ClusterPartition::largest() const noexcept {
    ClusterInfo best{0, 0};
    for (const auto& c : clusters) {
        if (c.size > best.size) {
            best = c;
        }
    }
    return best;
}

std::map<std::size_t, std::size_t> ClusterPartition::size_histogram() const {
    std::map<std::size_t, std::size_t> hist;
    for (const auto& c : clusters) {
        ++hist[c.size];
    }
    return hist;
}

std::vector<std::size_t> ClusterPartition::sizes_descending() const {
    std::vector<std::size_t> sizes;
    sizes.reserve(clusters.size());
    for (const auto& c : clusters) {
        sizes.push_back(c.size);
    }
    std::sort(sizes.begin(), sizes.end(), std::greater<>());
    return sizes;
}

}  // namespace critlab
