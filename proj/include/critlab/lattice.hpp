#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace critlab {

enum class Boundary { Periodic, Open };

struct Coord {
    std::size_t x = 0, y = 0, z = 0;
    friend bool operator==(const Coord&, const Coord&) = default;
};

/// Up to six neighbor indices, stored inline.
class NeighborList {
public:
    void push(std::size_t site) noexcept { items_[count_++] = site; }
    std::size_t size() const noexcept { return count_; }
    const std::size_t* begin() const noexcept { return items_.data(); }
    const std::size_t* end() const noexcept { return items_.data() + count_; }
    std::size_t operator[](std::size_t i) const noexcept { return items_[i]; }

private:
    std::array<std::size_t, 6> items_{};
    std::size_t count_ = 0;
};

/// Simple cubic lattice shape with a boundary condition per axis.
///
/// Flat index of (x, y, z) is x + Lx * (y + Ly * z). Under Open boundaries a
/// site on a face has fewer than six neighbors; under Periodic boundaries the
/// neighbor across the face is the wrapped site. An axis of extent 1 has no
/// neighbors along it; an axis of extent 2 under Periodic boundaries yields
/// the single other site once.
class LatticeGeometry {
public:
    LatticeGeometry(std::array<std::size_t, 3> dims, std::array<Boundary, 3> boundary);
    LatticeGeometry(std::array<std::size_t, 3> dims, Boundary boundary)
        : LatticeGeometry(dims, {boundary, boundary, boundary}) {}

    static LatticeGeometry cube(std::size_t side, Boundary boundary) {
        return LatticeGeometry({side, side, side}, boundary);
    }

    const std::array<std::size_t, 3>& dims() const noexcept { return dims_; }
    const std::array<Boundary, 3>& boundary() const noexcept { return boundary_; }
    std::size_t size() const noexcept { return size_; }

    std::size_t index(Coord c) const noexcept { return c.x + dims_[0] * (c.y + dims_[1] * c.z); }
    std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept {
        return index(Coord{x, y, z});
    }
    Coord coord(std::size_t site) const noexcept {
        return {site % dims_[0], (site / dims_[0]) % dims_[1], site / (dims_[0] * dims_[1])};
    }

    /// Neighbor one step in the +axis direction, if it exists.
    std::optional<std::size_t> forward(std::size_t site, int axis) const noexcept;
    /// Neighbor one step in the -axis direction, if it exists.
    std::optional<std::size_t> backward(std::size_t site, int axis) const noexcept;

    /// Distinct nearest neighbors. Throws std::out_of_range for a bad site.
    NeighborList neighbors(std::size_t site) const;

    /// Number of distinct nearest-neighbor bonds (each counted once).
    std::size_t bond_count() const noexcept;

    friend bool operator==(const LatticeGeometry&, const LatticeGeometry&) = default;

private:
    std::array<std::size_t, 3> dims_;
    std::array<Boundary, 3> boundary_;
    std::size_t size_;
};

/// Dense 3D grid of per-site states over a LatticeGeometry.
template <typename StateT>
class Lattice3D {
public:
    explicit Lattice3D(LatticeGeometry geometry, StateT fill = StateT{})
        : geometry_(std::move(geometry)), sites_(geometry_.size(), fill) {}

    const LatticeGeometry& geometry() const noexcept { return geometry_; }
    std::size_t size() const noexcept { return sites_.size(); }

    StateT& operator[](std::size_t site) noexcept { return sites_[site]; }
    const StateT& operator[](std::size_t site) const noexcept { return sites_[site]; }
    StateT& at(Coord c) { return sites_.at(geometry_.index(c)); }
    const StateT& at(Coord c) const { return sites_.at(geometry_.index(c)); }

    std::vector<StateT>& sites() noexcept { return sites_; }
    const std::vector<StateT>& sites() const noexcept { return sites_; }

    NeighborList neighbors(std::size_t site) const { return geometry_.neighbors(site); }

private:
    LatticeGeometry geometry_;
    std::vector<StateT> sites_;
};

/// Precomputed neighbor lists for hot loops.
class NeighborTable {
public:
    explicit NeighborTable(const LatticeGeometry& geometry);

    const NeighborList& operator[](std::size_t site) const noexcept { return lists_[site]; }
    std::size_t size() const noexcept { return lists_.size(); }

private:
    std::vector<NeighborList> lists_;
};

}  // namespace critlab
