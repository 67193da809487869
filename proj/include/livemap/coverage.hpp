#pragma once

// Coverage-disk geometry on a raster grid, the pairwise overlap graph, average
// overlapping ratio and the greedy coverage-constrained vehicle schedule.

#include "livemap/common.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace livemap::coverage {

struct CoverageDisk {
    std::int64_t vehicle_id = 0;
    WorldPoint center;
    double radius = 50.0;
};

/// Axis-aligned raster with cell centers at origin + (i + 0.5) * cell.
class Grid {
public:
    Grid(double x0, double y0, double cell, int cols, int rows)
        : x0_(x0), y0_(y0), cell_(cell), cols_(cols), rows_(rows) {}

    /// Grid covering the bounding box of `disks`.
    static Grid bounding(std::span<const CoverageDisk> disks, double cell);

    double cell() const { return cell_; }
    int cols() const { return cols_; }
    int rows() const { return rows_; }
    double x_center(int col) const { return x0_ + (col + 0.5) * cell_; }
    double y_center(int row) const { return y0_ + (row + 0.5) * cell_; }

private:
    double x0_, y0_, cell_;
    int cols_, rows_;
};

/// A disk rasterized as one column span per covered row.
struct DiskRaster {
    int first_row = 0;
    std::vector<std::pair<int, int>> spans; // inclusive [lo, hi]; lo > hi means empty row

    std::int64_t cell_count() const;
};

DiskRaster rasterize(const CoverageDisk& disk, const Grid& grid);

/// Number of cells in both rasters.
std::int64_t intersection_cells(const DiskRaster& a, const DiskRaster& b);

/// Incrementally maintained union of rasters.
class UnionCounter {
public:
    explicit UnionCounter(const Grid& grid);
    void add(const DiskRaster& r);
    void remove(const DiskRaster& r);
    std::int64_t covered() const { return covered_; }

private:
    int cols_;
    std::vector<std::int32_t> counts_;
    std::int64_t covered_ = 0;
};

/// cell^2 times the number of cell centers inside any disk.
double union_area(std::span<const CoverageDisk> disks, double cell = 2.0);

/// |a intersect b| / |a union b| on a shared raster.
double overlap_ratio(const CoverageDisk& a, const CoverageDisk& b, double cell = 2.0);

/// Analytic intersection-over-union of two equal-radius disks.
double lens_overlap_ratio(double radius, double center_distance);

struct CoverageGraph {
    std::vector<CoverageDisk> vertices;
    std::vector<double> edges; // row-major n x n, symmetric, zero diagonal

    std::size_t size() const { return vertices.size(); }
    double edge(std::size_t i, std::size_t j) const { return edges[i * vertices.size() + j]; }
};

CoverageGraph build_graph(std::span<const CoverageDisk> disks, double cell = 2.0);

/// Average overlapping ratio of vertex i over the active set, divided by the
/// total vertex count.
double aor(const CoverageGraph& graph, std::size_t i, const std::vector<bool>& active);

struct ScheduleResult {
    std::vector<bool> scheduled; // parallel to the input disks
    double achieved_fraction = 1.0;
    std::int64_t full_cells = 0;
    std::int64_t active_cells = 0;

    std::size_t scheduled_count() const;
};

/// Greedy pruning: repeatedly unschedule the active vehicle with the highest AoR
/// (ties to the lowest vehicle id). A removal that leaves the active union at or
/// below beta times the full union is undone and ends the loop. The last active
/// vehicle is never removed.
ScheduleResult schedule(std::span<const CoverageDisk> disks, double beta, double cell = 2.0);

/// Fraction of the full union retained by the scheduled subset.
double coverage_fraction(std::span<const CoverageDisk> disks, const std::vector<bool>& scheduled,
                         double cell);

} // namespace livemap::coverage
