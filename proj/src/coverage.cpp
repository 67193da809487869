#include "livemap/coverage.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace livemap::coverage {

Grid Grid::bounding(std::span<const CoverageDisk> disks, double cell) {
    if (!(cell > 0.0)) throw InvalidInput("coverage: cell size must be positive");
    if (disks.empty()) return Grid(0.0, 0.0, cell, 0, 0);
    double x_lo = std::numeric_limits<double>::infinity(), y_lo = x_lo;
    double x_hi = -x_lo, y_hi = -x_lo;
    for (const auto& d : disks) {
        if (!(d.radius > 0.0)) throw InvalidInput("coverage: disk radius must be positive");
        x_lo = std::min(x_lo, d.center.x - d.radius);
        x_hi = std::max(x_hi, d.center.x + d.radius);
        y_lo = std::min(y_lo, d.center.y - d.radius);
        y_hi = std::max(y_hi, d.center.y + d.radius);
    }
    const int cols = static_cast<int>(std::ceil((x_hi - x_lo) / cell)) + 1;
    const int rows = static_cast<int>(std::ceil((y_hi - y_lo) / cell)) + 1;
    return Grid(x_lo, y_lo, cell, cols, rows);
}

std::int64_t DiskRaster::cell_count() const {
    std::int64_t n = 0;
    for (const auto& [lo, hi] : spans) {
        if (hi >= lo) n += hi - lo + 1;
    }
    return n;
}

DiskRaster rasterize(const CoverageDisk& disk, const Grid& grid) {
    DiskRaster out;
    if (grid.rows() == 0) return out;
    const double c = grid.cell();
    const double r = disk.radius;
    const double y0 = grid.y_center(0) - 0.5 * c;
    const double x0 = grid.x_center(0) - 0.5 * c;
    int row_lo = static_cast<int>(std::ceil((disk.center.y - r - y0) / c - 0.5));
    int row_hi = static_cast<int>(std::floor((disk.center.y + r - y0) / c - 0.5));
    row_lo = std::max(row_lo, 0);
    row_hi = std::min(row_hi, grid.rows() - 1);
    out.first_row = row_lo;
    for (int row = row_lo; row <= row_hi; ++row) {
        const double dy = grid.y_center(row) - disk.center.y;
        const double rem = r * r - dy * dy;
        if (rem < 0.0) {
            out.spans.emplace_back(1, 0);
            continue;
        }
        const double hw = std::sqrt(rem);
        int lo = static_cast<int>(std::ceil((disk.center.x - hw - x0) / c - 0.5));
        int hi = static_cast<int>(std::floor((disk.center.x + hw - x0) / c - 0.5));
        lo = std::max(lo, 0);
        hi = std::min(hi, grid.cols() - 1);
        out.spans.emplace_back(lo, hi);
    }
    return out;
}

std::int64_t intersection_cells(const DiskRaster& a, const DiskRaster& b) {
    const int a_end = a.first_row + static_cast<int>(a.spans.size());
    const int b_end = b.first_row + static_cast<int>(b.spans.size());
    const int lo_row = std::max(a.first_row, b.first_row);
    const int hi_row = std::min(a_end, b_end);
    std::int64_t n = 0;
    for (int row = lo_row; row < hi_row; ++row) {
        const auto& sa = a.spans[static_cast<std::size_t>(row - a.first_row)];
        const auto& sb = b.spans[static_cast<std::size_t>(row - b.first_row)];
        const int lo = std::max(sa.first, sb.first);
        const int hi = std::min(sa.second, sb.second);
        if (hi >= lo) n += hi - lo + 1;
    }
    return n;
}

UnionCounter::UnionCounter(const Grid& grid)
    : cols_(grid.cols()),
      counts_(static_cast<std::size_t>(grid.cols()) * static_cast<std::size_t>(grid.rows()), 0) {}

void UnionCounter::add(const DiskRaster& r) {
    for (std::size_t k = 0; k < r.spans.size(); ++k) {
        const auto [lo, hi] = r.spans[k];
        const std::size_t base = static_cast<std::size_t>(r.first_row + static_cast<int>(k)) * static_cast<std::size_t>(cols_);
        for (int c = lo; c <= hi; ++c) {
            if (counts_[base + static_cast<std::size_t>(c)]++ == 0) ++covered_;
        }
    }
}

void UnionCounter::remove(const DiskRaster& r) {
    for (std::size_t k = 0; k < r.spans.size(); ++k) {
        const auto [lo, hi] = r.spans[k];
        const std::size_t base = static_cast<std::size_t>(r.first_row + static_cast<int>(k)) * static_cast<std::size_t>(cols_);
        for (int c = lo; c <= hi; ++c) {
            if (--counts_[base + static_cast<std::size_t>(c)] == 0) --covered_;
        }
    }
}

double union_area(std::span<const CoverageDisk> disks, double cell) {
    if (!(cell > 0.0)) throw InvalidInput("union_area: cell size must be positive");
    if (disks.empty()) return 0.0;
    const Grid grid = Grid::bounding(disks, cell);
    UnionCounter u(grid);
    for (const auto& d : disks) u.add(rasterize(d, grid));
    return cell * cell * static_cast<double>(u.covered());
}

double overlap_ratio(const CoverageDisk& a, const CoverageDisk& b, double cell) {
    const CoverageDisk pair[2] = {a, b};
    const Grid grid = Grid::bounding(pair, cell);
    const DiskRaster ra = rasterize(a, grid);
    const DiskRaster rb = rasterize(b, grid);
    const std::int64_t inter = intersection_cells(ra, rb);
    const std::int64_t uni = ra.cell_count() + rb.cell_count() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double lens_overlap_ratio(double r, double d) {
    if (d >= 2.0 * r) return 0.0;
    const double inter = 2.0 * r * r * std::acos(d / (2.0 * r)) - 0.5 * d * std::sqrt(4.0 * r * r - d * d);
    const double uni = 2.0 * std::numbers::pi * r * r - inter;
    return inter / uni;
}

namespace {

CoverageGraph graph_from_rasters(std::span<const CoverageDisk> disks, const std::vector<DiskRaster>& rasters) {
    const std::size_t n = disks.size();
    CoverageGraph g;
    g.vertices.assign(disks.begin(), disks.end());
    g.edges.assign(n * n, 0.0);
    std::vector<std::int64_t> cells(n);
    for (std::size_t i = 0; i < n; ++i) cells[i] = rasters[i].cell_count();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dist = ground_distance(disks[i].center, disks[j].center);
            if (dist >= disks[i].radius + disks[j].radius) continue;
            const std::int64_t inter = intersection_cells(rasters[i], rasters[j]);
            const std::int64_t uni = cells[i] + cells[j] - inter;
            const double e = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
            g.edges[i * n + j] = e;
            g.edges[j * n + i] = e;
        }
    }
    return g;
}

} // namespace

CoverageGraph build_graph(std::span<const CoverageDisk> disks, double cell) {
    const Grid grid = Grid::bounding(disks, cell);
    std::vector<DiskRaster> rasters;
    rasters.reserve(disks.size());
    for (const auto& d : disks) rasters.push_back(rasterize(d, grid));
    return graph_from_rasters(disks, rasters);
}

double aor(const CoverageGraph& graph, std::size_t i, const std::vector<bool>& active) {
    const std::size_t n = graph.size();
    if (n == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j != i && active[j]) sum += graph.edge(i, j);
    }
    return sum / static_cast<double>(n);
}

std::size_t ScheduleResult::scheduled_count() const {
    return static_cast<std::size_t>(std::count(scheduled.begin(), scheduled.end(), true));
}

ScheduleResult schedule(std::span<const CoverageDisk> disks, double beta, double cell) {
    if (!(beta >= 0.0) || beta > 1.0) throw InvalidInput("schedule: beta must lie in [0, 1]");
    ScheduleResult result;
    const std::size_t n = disks.size();
    result.scheduled.assign(n, true);
    if (n == 0) return result;

    const Grid grid = Grid::bounding(disks, cell);
    std::vector<DiskRaster> rasters;
    rasters.reserve(n);
    for (const auto& d : disks) rasters.push_back(rasterize(d, grid));
    const CoverageGraph graph = graph_from_rasters(disks, rasters);

    UnionCounter active_union(grid);
    for (const auto& r : rasters) active_union.add(r);
    const std::int64_t full = active_union.covered();
    const double floor_cells = beta * static_cast<double>(full);

    std::vector<bool>& active = result.scheduled;
    std::size_t active_count = n;
    while (active_count > 1) {
        std::size_t pick = n;
        double best = -1.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k]) continue;
            const double o = aor(graph, k, active);
            if (o > best || (o == best && disks[k].vehicle_id < disks[pick].vehicle_id)) {
                best = o;
                pick = k;
            }
        }
        active[pick] = false;
        active_union.remove(rasters[pick]);
        if (static_cast<double>(active_union.covered()) <= floor_cells) {
            active[pick] = true;
            active_union.add(rasters[pick]);
            break;
        }
        --active_count;
    }
    result.full_cells = full;
    result.active_cells = active_union.covered();
    result.achieved_fraction = full == 0 ? 1.0 : static_cast<double>(result.active_cells) / static_cast<double>(full);
    return result;
}

double coverage_fraction(std::span<const CoverageDisk> disks, const std::vector<bool>& scheduled, double cell) {
    if (disks.empty()) return 1.0;
    const Grid grid = Grid::bounding(disks, cell);
    UnionCounter full(grid), active(grid);
    for (std::size_t i = 0; i < disks.size(); ++i) {
        const DiskRaster r = rasterize(disks[i], grid);
        full.add(r);
        if (scheduled[i]) active.add(r);
    }
    return full.covered() == 0 ? 1.0 : static_cast<double>(active.covered()) / static_cast<double>(full.covered());
}

} // namespace livemap::coverage
