#include "livemap/coverage.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace livemap;
using namespace livemap::coverage;

namespace {

std::vector<CoverageDisk> random_disks(std::mt19937_64& rng, int n, double extent, double rmin, double rmax) {
    std::uniform_real_distribution<double> pos(0.0, extent), rad(rmin, rmax);
    std::vector<CoverageDisk> d;
    for (int i = 0; i < n; ++i) d.push_back({i, {pos(rng), pos(rng), 0.0}, rad(rng)});
    return d;
}

} // namespace

TEST_CASE("single disk area approaches pi r^2") {
    const CoverageDisk d{0, {0, 0, 0}, 50.0};
    const double exact = std::numbers::pi * 2500.0;
    CHECK(std::abs(union_area(std::span(&d, 1), 1.0) - exact) / exact < 0.01);
    CHECK(std::abs(union_area(std::span(&d, 1), 0.25) - exact) / exact < 0.002);
}

TEST_CASE("union of disjoint disks adds, identical disks do not") {
    const std::vector<CoverageDisk> apart{{0, {0, 0, 0}, 10}, {1, {100, 0, 0}, 10}};
    const CoverageDisk one = apart[0];
    CHECK(union_area(apart, 1.0) == doctest::Approx(2.0 * union_area(std::span(&one, 1), 1.0)).epsilon(0.02));
    const std::vector<CoverageDisk> same{{0, {5, 5, 0}, 10}, {1, {5, 5, 0}, 10}};
    CHECK(union_area(same, 1.0) == union_area(std::span(&same[0], 1), 1.0));
    CHECK(union_area(std::vector<CoverageDisk>{}, 1.0) == 0.0);
}

TEST_CASE("overlap ratio bounds and lens agreement") {
    const CoverageDisk a{0, {0, 0, 0}, 40};
    CHECK(overlap_ratio(a, a, 1.0) == 1.0);
    CHECK(overlap_ratio(a, {1, {100, 0, 0}, 40}, 1.0) == 0.0);
    CHECK(lens_overlap_ratio(40, 0.0) == doctest::Approx(1.0));
    CHECK(lens_overlap_ratio(40, 80.0) == 0.0);
    for (double d : {10.0, 30.0, 50.0, 70.0}) {
        const double grid = overlap_ratio(a, {1, {d, 0, 0}, 40}, 0.5);
        CHECK(grid == doctest::Approx(lens_overlap_ratio(40, d)).epsilon(0.01));
    }
}

TEST_CASE("coverage graph is symmetric with zero diagonal") {
    std::mt19937_64 rng(11);
    const auto disks = random_disks(rng, 12, 200, 20, 60);
    const CoverageGraph g = build_graph(disks, 2.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(g.edge(i, i) == 0.0);
        for (std::size_t j = 0; j < g.size(); ++j) {
            CHECK(g.edge(i, j) == g.edge(j, i));
            CHECK(g.edge(i, j) >= 0.0);
            CHECK(g.edge(i, j) <= 1.0);
        }
    }
}

TEST_CASE("aor averages over all vertices") {
    const std::vector<CoverageDisk> d{{0, {0, 0, 0}, 10}, {1, {0, 0, 0}, 10}, {2, {500, 0, 0}, 10}};
    const CoverageGraph g = build_graph(d, 1.0);
    const std::vector<bool> all(3, true);
    CHECK(aor(g, 0, all) == doctest::Approx(1.0 / 3.0));
    CHECK(aor(g, 2, all) == 0.0);
    const std::vector<bool> without1{true, false, true};
    CHECK(aor(g, 0, without1) == 0.0);
}

TEST_CASE("duplicate disks: the lowest id is pruned first") {
    const std::vector<CoverageDisk> d{{7, {0, 0, 0}, 20}, {3, {0, 0, 0}, 20}};
    const ScheduleResult r = schedule(d, 0.8, 1.0);
    CHECK(r.scheduled_count() == 1);
    CHECK(r.scheduled[0]);
    CHECK_FALSE(r.scheduled[1]);
    CHECK(r.achieved_fraction == 1.0);
}

TEST_CASE("disjoint disks cannot be pruned below beta") {
    std::vector<CoverageDisk> d;
    for (int i = 0; i < 4; ++i) d.push_back({i, {200.0 * i, 0, 0}, 20});
    const ScheduleResult r = schedule(d, 0.8, 2.0);
    CHECK(r.scheduled_count() == 4);
}

TEST_CASE("edge cases: empty, single, beta zero") {
    CHECK(schedule(std::vector<CoverageDisk>{}, 0.8).scheduled.empty());
    const std::vector<CoverageDisk> one{{0, {0, 0, 0}, 10}};
    CHECK(schedule(one, 1.0).scheduled_count() == 1);
    std::mt19937_64 rng(2);
    const auto d = random_disks(rng, 10, 100, 30, 40);
    CHECK(schedule(d, 0.0).scheduled_count() == 1);
    CHECK_THROWS_AS(schedule(d, 1.5), InvalidInput);
}

TEST_CASE("schedule keeps coverage above beta and stops at the first violation") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 60; ++trial) {
        const auto disks = random_disks(rng, 20, 300, 25, 75);
        const double beta = 0.8;
        const ScheduleResult r = schedule(disks, beta, 2.0);
        CHECK(r.achieved_fraction > beta);
        CHECK(coverage_fraction(disks, r.scheduled, 2.0) == doctest::Approx(r.achieved_fraction));
        if (r.scheduled_count() > 1) {
            // Removing the next greedy pick must break the constraint.
            const CoverageGraph g = build_graph(disks, 2.0);
            std::size_t pick = disks.size();
            double best = -1.0;
            for (std::size_t k = 0; k < disks.size(); ++k) {
                if (!r.scheduled[k]) continue;
                const double o = aor(g, k, r.scheduled);
                if (o > best || (o == best && disks[k].vehicle_id < disks[pick].vehicle_id)) {
                    best = o;
                    pick = k;
                }
            }
            std::vector<bool> next = r.scheduled;
            next[pick] = false;
            CHECK(coverage_fraction(disks, next, 2.0) <= beta);
        }
    }
}

TEST_CASE("coverage fraction of nothing scheduled is zero") {
    const std::vector<CoverageDisk> d{{0, {0, 0, 0}, 10}, {1, {30, 0, 0}, 10}};
    CHECK(coverage_fraction(d, {false, false}, 1.0) == 0.0);
    CHECK(coverage_fraction(d, {true, true}, 1.0) == 1.0);
    CHECK(coverage_fraction(d, {true, false}, 1.0) == doctest::Approx(0.5).epsilon(0.01));
}
