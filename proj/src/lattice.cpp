#include "critlab/lattice.hpp"

#include <algorithm>
#include <string>

namespace critlab {

LatticeGeometry::LatticeGeometry(std::array<std::size_t, 3> dims, std::array<Boundary, 3> boundary)
    : dims_(dims), boundary_(boundary), size_(dims[0] * dims[1] * dims[2]) {
    for (auto d : dims_) {
        if (d == 0) {
            throw std::invalid_argument("lattice dimensions must be positive");
        }
    }
}

std::optional<std::size_t> LatticeGeometry::forward(std::size_t site, int axis) const noexcept {
    Coord c = coord(site);
    std::size_t* component = axis == 0 ? &c.x : axis == 1 ? &c.y : &c.z;
    const std::size_t extent = dims_[axis];
    if (extent == 1) {
        return std::nullopt;
    }
    if (*component + 1 < extent) {
        ++*component;
    } else if (boundary_[axis] == Boundary::Periodic && extent > 2) {
        *component = 0;
    } else {
        return std::nullopt;
    }
    return index(c);
}

std::optional<std::size_t> LatticeGeometry::backward(std::size_t site, int axis) const noexcept {
    Coord c = coord(site);
    std::size_t* component = axis == 0 ? &c.x : axis == 1 ? &c.y : &c.z;
    const std::size_t extent = dims_[axis];
    if (extent == 1) {
        return std::nullopt;
    }
    if (*component > 0) {
        --*component;
    } else if (boundary_[axis] == Boundary::Periodic && extent > 2) {
        *component = extent - 1;
    } else {
        return std::nullopt;
    }
    return index(c);
}

NeighborList LatticeGeometry::neighbors(std::size_t site) const {
    if (site >= size_) {
        throw std::out_of_range("site index " + std::to_string(site) + " outside lattice of " +
                                std::to_string(size_) + " sites");
    }
    NeighborList out;
    for (int axis = 0; axis < 3; ++axis) {
        if (auto f = forward(site, axis)) {
            out.push(*f);
        }
        if (auto b = backward(site, axis)) {
            out.push(*b);
        }
    }
    return out;
}

std::size_t LatticeGeometry::bond_count() const noexcept {
    std::size_t total = 0;
    for (int axis = 0; axis < 3; ++axis) {
        const std::size_t extent = dims_[axis];
        const std::size_t per_line =
            extent == 1 ? 0 : (boundary_[axis] == Boundary::Periodic && extent > 2 ? extent : extent - 1);
        total += per_line * (size_ / extent);
    }
    return total;
}

NeighborTable::NeighborTable(const LatticeGeometry& geometry) {
    lists_.reserve(geometry.size());
    for (std::size_t i = 0; i < geometry.size(); ++i) {
        lists_.push_back(geometry.neighbors(i));
    }
}

}  // namespace critlab
