#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>

#include "critlab/clusters.hpp"
#include "critlab/lattice.hpp"
#include "critlab/parallel.hpp"
#include "critlab/percolation.hpp"
#include "critlab/rng.hpp"
#include "critlab/stats.hpp"
#include "oracles.hpp"

using namespace critlab;

namespace {

std::set<std::size_t> neighbor_set(const LatticeGeometry& g, std::size_t site) {
    auto n = g.neighbors(site);
    return {n.begin(), n.end()};
}

// Union-find over a random bond configuration on an arbitrary-boundary lattice.
ClusterPartition label_bonds(const LatticeGeometry& g, const std::vector<std::uint8_t>& open) {
    return label_clusters(
        g.size(),
        [&](std::size_t i, auto&& visit) {
            for (std::size_t j : g.neighbors(i)) {
                visit(j);
            }
        },
        [&](std::size_t i, std::size_t j) {
            for (int a = 0; a < 3; ++a) {
                if (g.forward(i, a) == j && open[3 * i + a]) return true;
                if (g.forward(j, a) == i && open[3 * j + a]) return true;
            }
            return false;
        });
}

void check_partition_invariants(const ClusterPartition& p) {
    std::size_t total = 0;
    std::set<std::size_t> listed;
    for (const auto& c : p.clusters) {
        total += c.size;
        listed.insert(c.label);
    }
    CHECK(total == p.n_elements);
    std::set<std::size_t> used;
    for (auto l : p.labels) {
        if (l != ClusterPartition::unassigned) used.insert(l);
    }
    CHECK(used == listed);
}

}  // namespace

TEST_CASE("index mapping round-trips for every site") {
    const LatticeGeometry g({3, 4, 5}, Boundary::Periodic);
    CHECK(g.size() == 60);
    Lattice3D<int> lat(g, 7);
    CHECK(lat.size() == 60);
    std::set<std::size_t> seen;
    for (std::size_t x = 0; x < 3; ++x)
        for (std::size_t y = 0; y < 4; ++y)
            for (std::size_t z = 0; z < 5; ++z) {
                const auto i = g.index(x, y, z);
                CHECK(g.coord(i) == Coord{x, y, z});
                seen.insert(i);
            }
    CHECK(seen.size() == 60);
    CHECK(*seen.rbegin() == 59);
}

TEST_CASE("zero extent is rejected") {
    CHECK_THROWS_AS(LatticeGeometry({0, 2, 2}, Boundary::Open), std::invalid_argument);
}

TEST_CASE("neighbor counts on open and periodic cubes") {
    const auto open = LatticeGeometry::cube(4, Boundary::Open);
    CHECK(open.neighbors(open.index(0, 0, 0)).size() == 3);
    CHECK(open.neighbors(open.index(1, 0, 0)).size() == 4);
    CHECK(open.neighbors(open.index(1, 1, 0)).size() == 5);
    CHECK(open.neighbors(open.index(1, 1, 1)).size() == 6);
    const auto periodic = LatticeGeometry::cube(4, Boundary::Periodic);
    for (std::size_t i = 0; i < periodic.size(); ++i) {
        CHECK(periodic.neighbors(i).size() == 6);
    }
    CHECK(neighbor_set(periodic, 0).count(periodic.index(3, 0, 0)) == 1);
    CHECK_THROWS_AS(periodic.neighbors(64), std::out_of_range);
}

TEST_CASE("neighbors agree with coordinate arithmetic and are symmetric") {
    for (auto bc : {Boundary::Open, Boundary::Periodic}) {
        const LatticeGeometry g({2, 3, 5}, bc);
        for (std::size_t i = 0; i < g.size(); ++i) {
            for (std::size_t j : g.neighbors(i)) {
                CHECK(neighbor_set(g, j).count(i) == 1);
            }
        }
    }
    // Short axes: extent 1 has no neighbors along it, extent 2 yields the other site once.
    const LatticeGeometry thin({2, 1, 1}, Boundary::Periodic);
    CHECK(thin.neighbors(0).size() == 1);
    CHECK(thin.bond_count() == 1);
    CHECK(LatticeGeometry::cube(4, Boundary::Periodic).bond_count() == 3 * 64);
    CHECK(LatticeGeometry::cube(4, Boundary::Open).bond_count() == 3 * 3 * 16);
}

TEST_CASE("neighbor table mirrors the geometry") {
    const LatticeGeometry g({3, 4, 2}, {Boundary::Open, Boundary::Periodic, Boundary::Periodic});
    NeighborTable table(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto a = g.neighbors(i);
        const auto& b = table[i];
        REQUIRE(a.size() == b.size());
        CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
}

TEST_CASE("philox known-answer vectors") {
    using A4 = std::array<std::uint32_t, 4>;
    CHECK(RngStream::philox({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(RngStream::philox({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(RngStream::philox({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("equal seed and stream give identical draws; streams differ") {
    RngStream a(42, 3), b(42, 3), c(42, 4);
    bool differs = false;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a();
        CHECK(x == b());
        differs = differs || x != c();
    }
    CHECK(differs);
    CHECK(RngStream::algorithm == "philox4x32-10");
}

TEST_CASE("uniform and bounded draws") {
    RngStream r(9);
    RunningStats u;
    std::array<int, 7> bins{};
    for (int i = 0; i < 70000; ++i) {
        const double x = r.uniform();
        REQUIRE(x >= 0.0);
        REQUIRE(x < 1.0);
        u.add(x);
        const auto k = r.below(7);
        REQUIRE(k < 7);
        ++bins[k];
    }
    CHECK(u.mean() == doctest::Approx(0.5).epsilon(0.01));
    for (int b : bins) {
        CHECK(std::abs(b - 10000) < 5 * 93);  // 5 sigma of binomial(70000, 1/7)
    }
}

TEST_CASE("substreams are distinct, deterministic and uncorrelated") {
    const RngStream root(5);
    std::set<std::uint64_t> ids;
    for (std::uint64_t k = 0; k < 1000; ++k) {
        ids.insert(substream(root, k).stream_id());
        ids.insert(substream(substream(root, k), 0).stream_id());
    }
    CHECK(ids.size() == 2000);
    CHECK(substream(root, 3).stream_id() == substream(root, 3).stream_id());

    auto a = substream(root, 0), b = substream(root, 1);
    std::vector<double> x, y;
    for (int i = 0; i < 20000; ++i) {
        x.push_back(a.uniform());
        y.push_back(b.uniform());
    }
    double sxy = 0, sx = 0, sy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i]; sy += y[i]; sxy += x[i] * y[i]; sxx += x[i] * x[i]; syy += y[i] * y[i];
    }
    const double n = static_cast<double>(x.size());
    const double corr = (sxy / n - sx * sy / n / n) /
                        std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
    CHECK(std::abs(corr) < 5.0 / std::sqrt(n));
}

TEST_CASE("label_clusters trivial cases") {
    const auto g = LatticeGeometry::cube(2, Boundary::Open);
    auto all = label_lattice(g, [](std::size_t, std::size_t) { return true; }, [](std::size_t) { return true; });
    CHECK(all.cluster_count() == 1);
    CHECK(all.clusters[0].size == 8);
    CHECK(all.largest() == ClusterInfo{0, 8});
    auto none = label_lattice(g, [](std::size_t, std::size_t) { return false; }, [](std::size_t) { return true; });
    CHECK(none.cluster_count() == 8);
    CHECK(none.size_histogram() == std::map<std::size_t, std::size_t>{{1, 8}});
    check_partition_invariants(all);
    check_partition_invariants(none);
}

TEST_CASE("label_clusters agrees with flood fill on random 8^3 bond configurations") {
    RngStream rng(11);
    for (auto bc : {Boundary::Open, Boundary::Periodic}) {
        const auto g = LatticeGeometry::cube(8, bc);
        for (double p : {0.2, 0.3, 0.5}) {
            std::vector<std::uint8_t> open(3 * g.size());
            for (auto& b : open) b = rng.bernoulli(p);
            const auto part = label_bonds(g, open);
            const auto ref = oracle::flood_fill(
                g.size(),
                [&](std::size_t i) {
                    auto n = g.neighbors(i);
                    return std::vector<std::size_t>(n.begin(), n.end());
                },
                [&](std::size_t i, std::size_t j) {
                    for (int a = 0; a < 3; ++a) {
                        if (g.forward(i, a) == j && open[3 * i + a]) return true;
                        if (g.forward(j, a) == i && open[3 * j + a]) return true;
                    }
                    return false;
                },
                [](std::size_t) { return true; });
            CHECK(part.labels == ref);
            check_partition_invariants(part);
        }
    }
}

TEST_CASE("union-find equals flood fill on 1000 random configurations up to 16^3") {
    RngStream root(2024);
    std::size_t mismatches = 0;
    for (std::size_t k = 0; k < 1000; ++k) {
        RngStream r = substream(root, k);
        const std::size_t L = 2 + r.below(15);
        const double p = r.uniform();
        const auto mode = r.below(2) ? perc::Mode::Bond : perc::Mode::Site;
        const auto config = perc::sample_config(perc::spanning_geometry({L, L, L}), p, r, mode);
        const auto part = perc::label(config);
        mismatches += part.labels != oracle::percolation_labels(config);
    }
    CHECK(mismatches == 0);
}

TEST_CASE("labeling is idempotent") {
    RngStream rng(3);
    const auto config = perc::sample_config(perc::spanning_geometry({10, 10, 10}), 0.3, rng);
    const auto part = perc::label(config);
    const auto& g = config.geometry;
    const auto again = relabel(part, [&](std::size_t i, auto&& visit) {
        for (std::size_t j : g.neighbors(i)) visit(j);
    });
    CHECK(again == part);
}

TEST_CASE("excluded elements stay unassigned") {
    const auto g = LatticeGeometry::cube(3, Boundary::Open);
    auto part = label_lattice(g, [](std::size_t, std::size_t) { return true; },
                              [](std::size_t i) { return i % 2 == 0; });
    CHECK(part.n_elements == 14);
    CHECK(part.labels[1] == ClusterPartition::unassigned);
    check_partition_invariants(part);
}

TEST_CASE("partition helpers") {
    ClusterPartition p;
    p.labels = {0, 0, 2, 0, 2, 5};
    p.clusters = {{0, 3}, {2, 2}, {5, 1}};
    p.n_elements = 6;
    CHECK(p.size_of(2) == 2);
    CHECK(p.size_of(9) == 0);
    CHECK(p.sizes_descending() == std::vector<std::size_t>{3, 2, 1});
    CHECK(ClusterPartition{}.largest() == ClusterInfo{0, 0});
}

TEST_CASE("parallel_for results do not depend on the worker count") {
    auto work = [](std::size_t threads) {
        std::vector<double> out(200);
        parallel_for(out.size(), threads, [&](std::size_t i) {
            RngStream r = substream(RngStream(77), i);
            double s = 0;
            for (int k = 0; k < 100; ++k) s += r.uniform();
            out[i] = s;
        });
        return out;
    };
    CHECK(work(1) == work(4));
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                        if (i == 5) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
}

TEST_CASE("statistics helpers") {
    const std::vector<double> v{1, 2, 3, 4};
    const auto m = mean_se(v);
    CHECK(m.mean == doctest::Approx(2.5));
    CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    const auto b = blocked_mean_se(std::vector<double>{1, 1, 3, 3, 9}, 2);
    CHECK(b.mean == doctest::Approx(2.0));
    const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
    const auto line = fit_line(x, y);
    CHECK(line.slope == doctest::Approx(2.0));
    CHECK(line.intercept == doctest::Approx(1.0));
    CHECK(line.slope_se == doctest::Approx(0.0).epsilon(1e-12));
}
