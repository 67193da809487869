// Acceptance runner: one PASS/FAIL line per criterion, tolerances pinned below.
// Exit status is non-zero when any criterion fails.

#include "livemap/coverage.hpp"
#include "livemap/experiment.hpp"
#include "livemap/neural.hpp"
#include "livemap/replay.hpp"
#include "livemap/simnet.hpp"
#include "support/sanity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace livemap;
namespace ex = livemap::experiment;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kAreaRelTol = 0.02;
constexpr double kLensRelTol = 0.01;
constexpr double kGradTol = 1e-5;
constexpr double kSigmas = 3.0;
constexpr double kBanditRate = 0.95;
constexpr double kChainTol = 1e-2;
constexpr double kDistGap = 0.10;
constexpr double kEoFloor_s = 0.5;
constexpr double kCoverageSlack = 0.02;
constexpr double kIdentityRate = 0.95;
constexpr std::int64_t kIdentityDetections = 10000;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// 1. Rasterized union area against Monte Carlo; grid overlap against the lens formula.
Outcome geometry() {
    std::mt19937_64 rng(101);
    double worst_area = 0.0;
    for (int cfg = 0; cfg < 100; ++cfg) {
        std::uniform_int_distribution<int> count(1, 25);
        std::uniform_real_distribution<double> pos(0.0, 400.0), rad(25.0, 75.0);
        std::vector<coverage::CoverageDisk> disks;
        const int n = count(rng);
        double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
        for (int i = 0; i < n; ++i) {
            const coverage::CoverageDisk d{i, {pos(rng), pos(rng), 0.0}, rad(rng)};
            x0 = std::min(x0, d.center.x - d.radius);
            x1 = std::max(x1, d.center.x + d.radius);
            y0 = std::min(y0, d.center.y - d.radius);
            y1 = std::max(y1, d.center.y + d.radius);
            disks.push_back(d);
        }
        std::uniform_real_distribution<double> ux(x0, x1), uy(y0, y1);
        const int samples = 1000000;
        int inside = 0;
        for (int s = 0; s < samples; ++s) {
            const double x = ux(rng), y = uy(rng);
            for (const auto& d : disks) {
                const double dx = x - d.center.x, dy = y - d.center.y;
                if (dx * dx + dy * dy <= d.radius * d.radius) {
                    ++inside;
                    break;
                }
            }
        }
        const double mc = (x1 - x0) * (y1 - y0) * inside / samples;
        worst_area = std::max(worst_area, std::abs(coverage::union_area(disks) - mc) / mc);
    }

    double worst_lens = 0.0;
    for (double r : {25.0, 50.0, 75.0}) {
        for (double f : {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5}) {
            const coverage::CoverageDisk a{0, {0, 0, 0}, r}, b{1, {f * r, 0, 0}, r};
            const double exact = coverage::lens_overlap_ratio(r, f * r);
            worst_lens = std::max(worst_lens, std::abs(coverage::overlap_ratio(a, b, 0.25) - exact) / exact);
        }
    }
    return {worst_area < kAreaRelTol && worst_lens < kLensRelTol,
            "max area rel err " + fmt("%.4f", worst_area) + ", max lens rel err " + fmt("%.4f", worst_lens)};
}

// 2. Greedy schedule keeps coverage and stops at the first violating removal.
Outcome scheduling() {
    std::mt19937_64 rng(202);
    const double beta = 0.8, cell = 2.0;
    int coverage_fail = 0, break_fail = 0;
    for (int cfg = 0; cfg < 1000; ++cfg) {
        std::uniform_int_distribution<int> count(10, 80);
        std::uniform_real_distribution<double> pos(0.0, 500.0), rad(25.0, 75.0);
        std::vector<coverage::CoverageDisk> disks;
        const int n = count(rng);
        for (int i = 0; i < n; ++i) disks.push_back({i, {pos(rng), pos(rng), 0.0}, rad(rng)});
        const coverage::ScheduleResult r = coverage::schedule(disks, beta, cell);
        const double full_area = coverage::union_area(disks, cell);
        const double slack = cell * cell / full_area;
        if (coverage::coverage_fraction(disks, r.scheduled, cell) < beta - slack) ++coverage_fail;
        if (r.scheduled_count() <= 1) continue;
        const coverage::CoverageGraph g = coverage::build_graph(disks, cell);
        std::size_t pick = disks.size();
        double best = -1.0;
        for (std::size_t k = 0; k < disks.size(); ++k) {
            if (!r.scheduled[k]) continue;
            const double o = coverage::aor(g, k, r.scheduled);
            if (o > best || (o == best && disks[k].vehicle_id < disks[pick].vehicle_id)) {
                best = o;
                pick = k;
            }
        }
        std::vector<bool> next = r.scheduled;
        next[pick] = false;
        if (coverage::coverage_fraction(disks, next, cell) > beta) ++break_fail;
    }
    return {coverage_fail == 0 && break_fail == 0,
            "1000 configs, coverage violations " + std::to_string(coverage_fail) + ", break violations " +
                std::to_string(break_fail)};
}

// 3. Backprop against central differences on random architectures.
Outcome gradients() {
    std::mt19937_64 rng(303);
    std::uniform_int_distribution<int> width(1, 12), depth(1, 3), batch(1, 16);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> w(0.2, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        std::vector<int> sizes{width(rng)};
        const int layers = depth(rng);
        for (int l = 0; l < layers; ++l) sizes.push_back(width(rng));
        sizes.push_back(std::uniform_int_distribution<int>(2, 6)(rng));
        const nn::DenseNet net(sizes, rng());
        nn::Batch b;
        const int n = batch(rng);
        b.inputs = nn::Matrix(net.input_size(), n);
        std::uniform_int_distribution<int> act(0, net.output_size() - 1);
        for (int c = 0; c < n; ++c) {
            for (int r = 0; r < net.input_size(); ++r) b.inputs(r, c) = g(rng);
            b.targets.push_back(g(rng));
            b.actions.push_back(act(rng));
            b.weights.push_back(w(rng));
        }
        worst = std::max(worst, nn::grad_check(net, b));
    }
    return {worst < kGradTol, "20 networks, max rel err " + fmt("%.2e", worst)};
}

// 4. Proportional sampling frequencies and exact sum-tree bookkeeping.
Outcome replay_stats() {
    rl::ReplayParams p;
    p.alpha = 0.6;
    rl::PrioritizedReplay r(p);
    const std::vector<double> raw{1.0, 2.0, 3.0, 4.0};
    for (std::size_t i = 0; i < raw.size(); ++i) {
        r.store({{0.0}, 0, 0.0, {0.0}, false});
        r.update_priority(i, raw[i]);
    }
    double z = 0.0;
    for (double v : raw) z += std::pow(v, p.alpha);
    std::mt19937_64 rng(404);
    const int draws = 100000;
    std::vector<int> counts(raw.size(), 0);
    for (int k = 0; k < draws; ++k) ++counts[r.sample(1, rng, 0.4)->indices[0]];
    double worst_sigma = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double pi = std::pow(raw[i], p.alpha) / z;
        const double sigma = std::sqrt(pi * (1 - pi) / draws);
        worst_sigma = std::max(worst_sigma, std::abs(counts[i] / double(draws) - pi) / sigma);
    }

    // Dyadic priorities with alpha 1 keep every partial sum exact in binary.
    rl::ReplayParams q;
    q.alpha = 1.0;
    q.capacity = 1000;
    rl::PrioritizedReplay tree(q);
    std::vector<double> mirror;
    std::size_t next = 0;
    std::uniform_int_distribution<int> eighths(1, 64);
    bool exact = true;
    for (int op = 0; op < 100000; ++op) {
        if (mirror.empty() || op % 3 == 0) {
            const double m = mirror.empty() ? 1.0 : *std::max_element(mirror.begin(), mirror.end());
            const std::size_t at = tree.store({{0.0}, 0, 0.0, {0.0}, false});
            if (at != next) exact = false;
            if (mirror.size() < q.capacity) {
                mirror.push_back(m);
            } else {
                mirror[at] = m;
            }
            next = (next + 1) % q.capacity;
        } else {
            const std::size_t i = std::uniform_int_distribution<std::size_t>(0, mirror.size() - 1)(rng);
            const double v = eighths(rng) / 8.0;
            tree.update_priority(i, v);
            mirror[i] = v;
        }
        if (op % 1000 == 999 && tree.total() != std::accumulate(mirror.begin(), mirror.end(), 0.0)) exact = false;
    }
    exact = exact && tree.total() == std::accumulate(mirror.begin(), mirror.end(), 0.0);
    return {worst_sigma < kSigmas && exact,
            "max deviation " + fmt("%.2f", worst_sigma) + " sigma over 1e5 draws, tree total " +
                (exact ? "exact" : "drifted") + " after 1e5 ops"};
}

// 5. DQN sanity tasks with known answers.
Outcome dqn_sanity() {
    const auto bandit = testing::train_bandit(20000, 505);
    const double chain = testing::train_chain(5000, 506);
    return {bandit.optimal_rate >= kBanditRate && chain < kChainTol,
            "bandit optimal rate " + fmt("%.3f", bandit.optimal_rate) + ", chain max |Q-Q*| " + fmt("%.2e", chain)};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// 6. Stage sums, reproducible artifacts, equal share and FIFO on micro scenarios.
Outcome simulator() {
    ExperimentConfig c;
    c.scenario.duration_s = 20.0;
    const fs::path a = fs::temp_directory_path() / "livemap_accept_a", b = fs::temp_directory_path() / "livemap_accept_b";
    fs::remove_all(a);
    fs::remove_all(b);
    const ex::RunMetrics m = ex::run(c, ex::Algorithm::RO, 7, {a.string(), std::nullopt});
    ex::run(c, ex::Algorithm::RO, 7, {b.string(), std::nullopt});
    std::size_t bad_sum = 0;
    for (const auto* list : {&m.tasks, &m.local_tasks}) {
        for (const auto& t : *list) {
            if (t.latency() != t.onboard + t.uplink + t.queue + t.edge + t.downlink) ++bad_sum;
        }
    }
    bool identical = true;
    for (const char* f : {"tasks.csv", "coverage.csv", "summary.csv", "local_tasks.csv", "deltas.csv"}) {
        identical = identical && slurp(a / f) == slurp(b / f);
    }

    auto parked = [](int vehicles) {
        sim::SimConfig sc;
        sc.bandwidth_hz = 1e5;
        sc.downlink_bandwidth_hz = 1e5;
        sc.server_multipliers = {1.0};
        sc.radio.shadowing_sigma_db = 0.0;
        sc.radio.snr_ref_db = 10.0 * std::log10(3.0);
        return sim::Simulator(sc, scenario::MeasurementModel{}, std::vector<double>(static_cast<std::size_t>(vehicles), 1.0),
                              [](int, double) { return WorldPoint{}; }, 1, 2);
    };
    auto done = [](sim::Simulator& s) {
        std::vector<sim::TaskRecord> out;
        for (const auto& e : s.drain_events()) {
            if (e.kind == sim::Event::Kind::Completion) out.push_back(e.record);
        }
        return out;
    };
    sim::Simulator pair = parked(2);
    const double per_tick_half = 0.5e5 * pair.spectral_efficiency(0) * 1e-3;
    pair.submit_with_budgets(0, 0, {0, 10000, 0, 0});
    pair.submit_with_budgets(1, 0, {0, 10000, 0, 0});
    pair.run_until_idle();
    const auto two = done(pair);
    const bool equal_share = two.size() == 2 && two[0].uplink == two[1].uplink &&
                             two[0].uplink == static_cast<sim::Tick>(std::ceil(10000 / per_tick_half - 1e-9));

    sim::Simulator queue = parked(3);
    for (int v = 0; v < 3; ++v) queue.submit_with_budgets(v, 0, {0, 0, 0.010, 0});
    queue.run_until_idle();
    const auto fifo_done = done(queue);
    bool fifo = fifo_done.size() == 3;
    for (std::size_t k = 0; fifo && k < 3; ++k) {
        fifo = fifo_done[k].vehicle == static_cast<int>(k) && fifo_done[k].queue == static_cast<sim::Tick>(10 * k);
    }

    return {bad_sum == 0 && identical && equal_share && fifo && !m.tasks.empty(),
            std::to_string(m.tasks.size() + m.local_tasks.size()) + " tasks, stage-sum mismatches " +
                std::to_string(bad_sum) + ", csv " + (identical ? "identical" : "differ") + ", equal share " +
                (equal_share ? "ok" : "broken") + ", fifo " + (fifo ? "ok" : "broken")};
}

struct PaperRuns {
    ex::RunMetrics livemap, dist, ro, rm, eo;
};

// 7. Latency ordering on the default scenario, training included.
Outcome latency_ordering(const PaperRuns& r) {
    const double lm = r.livemap.summary.mean_latency_s, d = r.dist.summary.mean_latency_s;
    const double ro = r.ro.summary.mean_latency_s, rm = r.rm.summary.mean_latency_s, eo = r.eo.summary.mean_latency_s;
    const double gap = std::abs(d - lm) / lm;
    const bool ok = lm < ro && lm < rm && d < ro && d < rm && gap <= kDistGap && eo > kEoFloor_s;
    return {ok, "mean latency livemap " + fmt("%.4f", lm) + " s, livemap-dist " + fmt("%.4f", d) + " s (gap " +
                    fmt("%.1f", 100 * gap) + "%), ro " + fmt("%.4f", ro) + " s, rm " + fmt("%.4f", rm) + " s, eo " +
                    fmt("%.3f", eo) + " s"};
}

// 8. Coverage behaviour of the periodic central schedule versus the asynchronous one.
Outcome coverage_dynamics(const PaperRuns& r, double beta) {
    double lo = 1.0;
    for (const auto& s : r.livemap.coverage) lo = std::min(lo, s.fraction);
    const double mean = r.livemap.summary.coverage_mean;
    const double head_ful = r.livemap.summary.fulfillment_rate, dist_ful = r.dist.summary.fulfillment_rate;
    const bool ok = lo < beta && mean >= beta - kCoverageSlack && dist_ful > head_ful;
    return {ok, "central min " + fmt("%.3f", lo) + ", mean " + fmt("%.3f", mean) + ", fulfillment " +
                    fmt("%.3f", head_ful) + "; distributed mean " + fmt("%.3f", r.dist.summary.coverage_mean) +
                    ", fulfillment " + fmt("%.3f", dist_ful)};
}

// 9. Identity consistency of matched detections on the default scenario.
Outcome matching(const PaperRuns& r) {
    const auto& m = r.livemap;
    return {m.identity_rate >= kIdentityRate && m.identity_detections >= kIdentityDetections,
            "identity consistency " + fmt("%.4f", m.identity_rate) + " over " +
                std::to_string(m.identity_detections) + " detections"};
}

// 10. EO latency shape across the vehicle and bandwidth grids.
Outcome sweeps() {
    const ExperimentConfig c;
    const auto by_vehicles = ex::sweep(c, "vehicles", {25, 50, 100}, {ex::Algorithm::EO}, 1);
    const auto by_bandwidth = ex::sweep(c, "bandwidth", {1e5, 2e5, 4e5}, {ex::Algorithm::EO}, 1);
    bool ok = true;
    std::string detail = "vehicles";
    for (std::size_t i = 0; i < by_vehicles.size(); ++i) {
        if (i > 0 && by_vehicles[i].mean_latency_s < by_vehicles[i - 1].mean_latency_s) ok = false;
        detail += " " + fmt("%.3f", by_vehicles[i].mean_latency_s);
    }
    detail += "; bandwidth";
    for (std::size_t i = 0; i < by_bandwidth.size(); ++i) {
        if (i > 0 && by_bandwidth[i].mean_latency_s > by_bandwidth[i - 1].mean_latency_s) ok = false;
        detail += " " + fmt("%.3f", by_bandwidth[i].mean_latency_s);
    }
    return {ok, detail};
}

} // namespace

int main() {
    int failures = 0;
    // Runtime limits in seconds; 0 means unbounded.
    auto report = [&](int id, double limit_s, const std::function<Outcome()>& body) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o = body();
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (limit_s > 0 && secs >= limit_s) {
            o.pass = false;
            o.detail += ", over the " + fmt("%.0f", limit_s) + " s budget";
        }
        if (!o.pass) ++failures;
        std::printf("CRITERION %d %s: %s [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
    };

    report(1, 60, geometry);
    report(2, 120, scheduling);
    report(3, 30, gradients);
    report(4, 0, replay_stats);
    report(5, 300, dqn_sanity);
    report(6, 0, simulator);

    const ExperimentConfig defaults;
    PaperRuns runs;
    report(7, 900, [&] {
        runs.livemap = ex::run(defaults, ex::Algorithm::LiveMap, 1);
        runs.dist = ex::run(defaults, ex::Algorithm::LiveMapDist, 1);
        runs.ro = ex::run(defaults, ex::Algorithm::RO, 1);
        runs.rm = ex::run(defaults, ex::Algorithm::RM, 1);
        runs.eo = ex::run(defaults, ex::Algorithm::EO, 1);
        return latency_ordering(runs);
    });
    report(8, 0, [&] { return coverage_dynamics(runs, defaults.scenario.beta); });
    report(9, 0, [&] { return matching(runs); });
    report(10, 0, sweeps);

    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
