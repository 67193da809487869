#pragma once

// Tick-driven simulation of the offload pipeline: onboard compute, an
// equal-share uplink, min-load FIFO edge servers and an equal-share downlink.
// Time is an integer tick count so stage durations add up exactly.

#include "livemap/common.hpp"
#include "livemap/scenario.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <vector>

namespace livemap::sim {

using Tick = std::int64_t;
using TaskId = std::int64_t;

struct RadioParams {
    double path_loss_exponent = 3.0;
    double snr_ref_db = 80.0; // at 1 m
    double shadowing_sigma_db = 4.0;
    double coherence_s = 0.1; // shadowing redraw period
    WorldPoint base_station;
};

/// Log-distance SNR (linear) for a given shadowing offset in dB. Distance is
/// clamped to at least 1 m.
double snr_linear(const RadioParams& radio, const WorldPoint& position, double shadowing_db = 0.0);

struct SimConfig {
    double bandwidth_hz = 1e5;          // uplink
    double downlink_bandwidth_hz = 1e5; // same sharing rule as the uplink
    std::vector<double> server_multipliers{1.0, 1.0, 1.0, 1.0, 1.0};
    double tick_s = 0.001;
    RadioParams radio;
};

enum class Stage { Onboard, Uplink, Queued, Edge, Downlink, Done };

struct OffloadTask {
    TaskId id = 0;
    int vehicle = 0;
    int partition = 0; // -1 for a local-only task
    scenario::StageBudgets budgets;

    double remaining_onboard_s = 0.0;
    double remaining_uplink_bits = 0.0;
    double remaining_edge_s = 0.0;
    double remaining_downlink_bits = 0.0;

    Stage stage = Stage::Onboard;
    int server = -1;

    Tick submit = 0;
    Tick onboard_end = -1;
    Tick uplink_end = -1;
    Tick service_start = -1;
    Tick edge_end = -1;
    Tick complete = -1;

    bool local() const { return partition < 0; }
};

/// Per-stage durations of a finished task, in ticks.
struct TaskRecord {
    TaskId id = 0;
    int vehicle = 0;
    int partition = 0;
    Tick submit = 0;
    Tick onboard = 0;
    Tick uplink = 0;
    Tick queue = 0;
    Tick edge = 0;
    Tick downlink = 0;
    Tick complete = 0;

    bool local() const { return partition < 0; }
    Tick latency() const { return complete - submit; }
};

struct Event {
    enum class Kind { MapUpdate, Completion };
    Kind kind = Kind::Completion;
    Tick tick = 0;
    TaskId task = 0;
    int vehicle = 0;
    int partition = 0;
    TaskRecord record; // filled for completions
};

using PositionFn = std::function<WorldPoint(int vehicle, double t)>;

class Simulator {
public:
    /// `onboard_multipliers` has one entry per vehicle; draws for task k use a
    /// generator seeded from (measurement_seed, k).
    Simulator(SimConfig config, scenario::MeasurementModel model, std::vector<double> onboard_multipliers,
              PositionFn position, std::uint64_t radio_seed, std::uint64_t measurement_seed);

    /// Starts a task for partition y (-1 = local only) with budgets from the
    /// measurement model. Throws BusyError if the vehicle has a task in flight.
    TaskId submit(int vehicle, int partition);
    /// Same with explicit budgets (onboard time already scaled).
    TaskId submit_with_budgets(int vehicle, int partition, const scenario::StageBudgets& budgets);

    /// The budgets submit() would draw for task `id` of this vehicle.
    scenario::StageBudgets budgets_for(TaskId id, int vehicle, int partition) const;

    /// Advances one tick.
    void step();

    std::vector<Event> drain_events();

    Tick now_tick() const { return now_; }
    double now() const { return static_cast<double>(now_) * config_.tick_s; }
    double tick_s() const { return config_.tick_s; }
    const SimConfig& config() const { return config_; }
    int vehicle_count() const { return static_cast<int>(multipliers_.size()); }
    TaskId next_task_id() const { return next_id_; }

    bool busy(int vehicle) const { return in_flight_[static_cast<std::size_t>(vehicle)].has_value(); }
    const OffloadTask* in_flight(int vehicle) const;
    bool idle() const { return active_.empty(); }

    /// Shadowing offset in dB for the vehicle at the current tick.
    double shadowing_db(int vehicle) const;
    double snr(int vehicle) const;
    double spectral_efficiency(int vehicle) const;

    int offloads_in_flight() const; // non-local tasks not yet complete
    int edge_tasks() const;         // queued or in service
    int uplink_active() const;
    int downlink_active() const;
    /// Remaining wall-clock edge work per server.
    std::vector<double> server_loads() const;
    const std::deque<TaskId>& server_queue(int s) const { return servers_[static_cast<std::size_t>(s)].queue; }

    /// Steps until no task is in flight or `max_ticks` elapse.
    void run_until_idle(Tick max_ticks = 100'000'000);

private:
    struct Server {
        double multiplier = 1.0;
        std::deque<TaskId> queue; // front is in service
    };

    OffloadTask& task(TaskId id) { return active_.at(id); }
    void enter_uplink(OffloadTask& t);
    void enter_edge(OffloadTask& t);
    void finish_edge(OffloadTask& t);
    void enter_downlink(OffloadTask& t);
    void finish(OffloadTask& t);
    int min_load_server() const;
    double rate_bps(int vehicle, double bandwidth, int sharers) const;

    SimConfig config_;
    scenario::MeasurementModel model_;
    std::vector<double> multipliers_;
    PositionFn position_;
    std::uint64_t radio_seed_;
    std::uint64_t measurement_seed_;

    Tick now_ = 0;
    TaskId next_id_ = 0;
    std::map<TaskId, OffloadTask> active_;
    std::vector<std::optional<TaskId>> in_flight_;
    std::vector<Server> servers_;
    std::vector<Event> events_;
    std::vector<TaskId> finished_scratch_;
};

} // namespace livemap::sim
