#include "livemap/simnet.hpp"

#include <algorithm>
#include <cmath>

namespace livemap::sim {

namespace {

// Remaining work below this fraction of the original budget counts as done;
// absorbs float residue from repeated subtraction.
bool exhausted(double remaining, double initial) { return remaining <= 1e-9 * std::max(1.0, initial); }

std::uint64_t vehicle_key(std::uint64_t seed, int vehicle) {
    return splitmix64(seed ^ (static_cast<std::uint64_t>(vehicle) + 1) * 0xD1B54A32D192ED03ull);
}

} // namespace

double snr_linear(const RadioParams& radio, const WorldPoint& position, double shadowing_db) {
    const double d = std::max(1.0, ground_distance(position, radio.base_station));
    const double db = radio.snr_ref_db - 10.0 * radio.path_loss_exponent * std::log10(d) + shadowing_db;
    return std::pow(10.0, db / 10.0);
}

Simulator::Simulator(SimConfig config, scenario::MeasurementModel model, std::vector<double> onboard_multipliers,
                     PositionFn position, std::uint64_t radio_seed, std::uint64_t measurement_seed)
    : config_(std::move(config)),
      model_(std::move(model)),
      multipliers_(std::move(onboard_multipliers)),
      position_(std::move(position)),
      radio_seed_(radio_seed),
      measurement_seed_(measurement_seed),
      in_flight_(multipliers_.size()) {
    if (!(config_.tick_s > 0)) throw InvalidInput("tick must be positive");
    if (!(config_.bandwidth_hz > 0) || !(config_.downlink_bandwidth_hz > 0)) {
        throw InvalidInput("bandwidth must be positive");
    }
    if (config_.server_multipliers.empty()) throw InvalidInput("at least one edge server is required");
    for (double m : config_.server_multipliers) {
        if (!(m > 0)) throw InvalidInput("server multipliers must be positive");
        servers_.push_back(Server{m, {}});
    }
}

scenario::StageBudgets Simulator::budgets_for(TaskId id, int vehicle, int partition) const {
    std::mt19937_64 rng(splitmix64(measurement_seed_ ^ static_cast<std::uint64_t>(id) * 0x9E3779B97F4A7C15ull));
    return scenario::draw_budgets(model_, partition, multipliers_.at(static_cast<std::size_t>(vehicle)), rng);
}

TaskId Simulator::submit(int vehicle, int partition) {
    return submit_with_budgets(vehicle, partition, budgets_for(next_id_, vehicle, partition));
}

TaskId Simulator::submit_with_budgets(int vehicle, int partition, const scenario::StageBudgets& b) {
    if (vehicle < 0 || vehicle >= vehicle_count()) throw InvalidInput("submit: unknown vehicle");
    if (busy(vehicle)) throw BusyError("vehicle " + std::to_string(vehicle) + " already has a task in flight");
    OffloadTask t;
    t.id = next_id_++;
    t.vehicle = vehicle;
    t.partition = partition;
    t.budgets = b;
    t.remaining_onboard_s = b.onboard_s;
    t.remaining_uplink_bits = b.uplink_bits;
    t.remaining_edge_s = b.edge_s;
    t.remaining_downlink_bits = b.downlink_bits;
    t.submit = now_;
    t.stage = Stage::Onboard;
    auto [it, _] = active_.emplace(t.id, t);
    in_flight_[static_cast<std::size_t>(vehicle)] = t.id;
    if (exhausted(it->second.remaining_onboard_s, b.onboard_s)) {
        it->second.onboard_end = now_;
        enter_uplink(it->second);
        if (it->second.stage == Stage::Done) active_.erase(it);
    }
    return t.id;
}

const OffloadTask* Simulator::in_flight(int vehicle) const {
    const auto& id = in_flight_.at(static_cast<std::size_t>(vehicle));
    return id ? &active_.at(*id) : nullptr;
}

void Simulator::enter_uplink(OffloadTask& t) {
    if (t.local()) {
        finish(t);
        return;
    }
    t.stage = Stage::Uplink;
    if (exhausted(t.remaining_uplink_bits, t.budgets.uplink_bits)) {
        t.uplink_end = now_;
        enter_edge(t);
    }
}

int Simulator::min_load_server() const {
    int best = 0;
    double best_load = 0.0;
    for (std::size_t s = 0; s < servers_.size(); ++s) {
        double load = 0.0;
        for (TaskId id : servers_[s].queue) load += active_.at(id).remaining_edge_s / servers_[s].multiplier;
        if (s == 0 || load < best_load) {
            best = static_cast<int>(s);
            best_load = load;
        }
    }
    return best;
}

void Simulator::enter_edge(OffloadTask& t) {
    if (exhausted(t.remaining_edge_s, t.budgets.edge_s)) {
        // Nothing to compute at the edge: bypass the cluster.
        t.service_start = now_;
        finish_edge(t);
        return;
    }
    const int s = min_load_server();
    Server& server = servers_[static_cast<std::size_t>(s)];
    t.server = s;
    server.queue.push_back(t.id);
    if (server.queue.size() == 1) {
        t.stage = Stage::Edge;
        t.service_start = now_;
    } else {
        t.stage = Stage::Queued;
    }
}

void Simulator::finish_edge(OffloadTask& t) {
    t.edge_end = now_;
    Event e;
    e.kind = Event::Kind::MapUpdate;
    e.tick = now_;
    e.task = t.id;
    e.vehicle = t.vehicle;
    e.partition = t.partition;
    events_.push_back(e);
    enter_downlink(t);
}

void Simulator::enter_downlink(OffloadTask& t) {
    t.stage = Stage::Downlink;
    if (exhausted(t.remaining_downlink_bits, t.budgets.downlink_bits)) finish(t);
}

void Simulator::finish(OffloadTask& t) {
    t.stage = Stage::Done;
    t.complete = now_;
    if (t.local()) {
        // Local tasks only occupy the onboard stage.
        t.uplink_end = t.service_start = t.edge_end = t.onboard_end;
    }
    TaskRecord r;
    r.id = t.id;
    r.vehicle = t.vehicle;
    r.partition = t.partition;
    r.submit = t.submit;
    r.onboard = t.onboard_end - t.submit;
    r.uplink = t.uplink_end - t.onboard_end;
    r.queue = t.service_start - t.uplink_end;
    r.edge = t.edge_end - t.service_start;
    r.downlink = t.complete - t.edge_end;
    r.complete = t.complete;
    Event e;
    e.kind = Event::Kind::Completion;
    e.tick = now_;
    e.task = t.id;
    e.vehicle = t.vehicle;
    e.partition = t.partition;
    e.record = r;
    events_.push_back(e);
    in_flight_[static_cast<std::size_t>(t.vehicle)].reset();
}

double Simulator::shadowing_db(int vehicle) const {
    if (config_.radio.shadowing_sigma_db <= 0) return 0.0;
    const auto block = static_cast<std::uint64_t>(std::floor(now() / config_.radio.coherence_s + 1e-9));
    return config_.radio.shadowing_sigma_db * hashed_normal(vehicle_key(radio_seed_, vehicle), block);
}

double Simulator::snr(int vehicle) const {
    return snr_linear(config_.radio, position_(vehicle, now()), shadowing_db(vehicle));
}

double Simulator::spectral_efficiency(int vehicle) const { return std::log2(1.0 + snr(vehicle)); }

double Simulator::rate_bps(int vehicle, double bandwidth, int sharers) const {
    return bandwidth / static_cast<double>(sharers) * spectral_efficiency(vehicle);
}

void Simulator::step() {
    const double dt = config_.tick_s;
    int k_up = 0, k_down = 0;
    for (const auto& [id, t] : active_) {
        if (t.stage == Stage::Uplink) ++k_up;
        if (t.stage == Stage::Downlink) ++k_down;
    }

    // Consume one tick of every resource using the state at the tick start.
    std::vector<TaskId>& done = finished_scratch_;
    done.clear();
    for (auto& [id, t] : active_) {
        switch (t.stage) {
        case Stage::Onboard:
            t.remaining_onboard_s = std::max(0.0, t.remaining_onboard_s - dt);
            if (exhausted(t.remaining_onboard_s, t.budgets.onboard_s)) done.push_back(id);
            break;
        case Stage::Uplink:
            t.remaining_uplink_bits =
                std::max(0.0, t.remaining_uplink_bits - rate_bps(t.vehicle, config_.bandwidth_hz, k_up) * dt);
            if (exhausted(t.remaining_uplink_bits, t.budgets.uplink_bits)) done.push_back(id);
            break;
        case Stage::Downlink:
            t.remaining_downlink_bits = std::max(
                0.0, t.remaining_downlink_bits - rate_bps(t.vehicle, config_.downlink_bandwidth_hz, k_down) * dt);
            if (exhausted(t.remaining_downlink_bits, t.budgets.downlink_bits)) done.push_back(id);
            break;
        default:
            break;
        }
    }
    std::vector<int> served;
    for (std::size_t s = 0; s < servers_.size(); ++s) {
        Server& server = servers_[s];
        if (server.queue.empty()) continue;
        OffloadTask& t = task(server.queue.front());
        t.remaining_edge_s = std::max(0.0, t.remaining_edge_s - dt * server.multiplier);
        if (exhausted(t.remaining_edge_s, t.budgets.edge_s)) served.push_back(static_cast<int>(s));
    }

    ++now_;

    // Edge completions first so freed servers are visible to arrivals this tick.
    std::vector<TaskId> to_erase;
    for (int s : served) {
        Server& server = servers_[static_cast<std::size_t>(s)];
        OffloadTask& t = task(server.queue.front());
        server.queue.pop_front();
        finish_edge(t);
        if (t.stage == Stage::Done) to_erase.push_back(t.id);
        if (!server.queue.empty()) {
            OffloadTask& next = task(server.queue.front());
            next.stage = Stage::Edge;
            next.service_start = now_;
        }
    }
    for (TaskId id : done) {
        OffloadTask& t = task(id);
        switch (t.stage) {
        case Stage::Onboard:
            t.onboard_end = now_;
            enter_uplink(t);
            break;
        case Stage::Uplink:
            t.uplink_end = now_;
            enter_edge(t);
            break;
        case Stage::Downlink:
            finish(t);
            break;
        default:
            break;
        }
        if (t.stage == Stage::Done) to_erase.push_back(id);
    }
    for (TaskId id : to_erase) active_.erase(id);
}

std::vector<Event> Simulator::drain_events() {
    std::vector<Event> out;
    out.swap(events_);
    std::stable_sort(out.begin(), out.end(), [](const Event& a, const Event& b) {
        if (a.tick != b.tick) return a.tick < b.tick;
        if (a.task != b.task) return a.task < b.task;
        return a.kind == Event::Kind::MapUpdate && b.kind == Event::Kind::Completion;
    });
    return out;
}

int Simulator::offloads_in_flight() const {
    int n = 0;
    for (const auto& [id, t] : active_) n += t.local() ? 0 : 1;
    return n;
}

int Simulator::edge_tasks() const {
    int n = 0;
    for (const auto& s : servers_) n += static_cast<int>(s.queue.size());
    return n;
}

int Simulator::uplink_active() const {
    int n = 0;
    for (const auto& [id, t] : active_) n += t.stage == Stage::Uplink ? 1 : 0;
    return n;
}

int Simulator::downlink_active() const {
    int n = 0;
    for (const auto& [id, t] : active_) n += t.stage == Stage::Downlink ? 1 : 0;
    return n;
}

std::vector<double> Simulator::server_loads() const {
    std::vector<double> loads;
    for (const auto& s : servers_) {
        double load = 0.0;
        for (TaskId id : s.queue) load += active_.at(id).remaining_edge_s / s.multiplier;
        loads.push_back(load);
    }
    return loads;
}

void Simulator::run_until_idle(Tick max_ticks) {
    for (Tick i = 0; i < max_ticks && !active_.empty(); ++i) step();
}

} // namespace livemap::sim
