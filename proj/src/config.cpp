#include "livemap/config.hpp"

#include <json.hpp>

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace livemap {

using nlohmann::json;

namespace {

// One list of fields drives both reading and writing.
template <class V>
void visit(ExperimentConfig& c, V& v) {
    v.section("scenario", [&] {
        auto& s = c.scenario;
        v.field("vehicles", s.vehicles);
        v.field("servers", s.servers);
        v.field("bandwidth_hz", s.bandwidth_hz);
        v.field("coverage_radius_m", s.coverage_radius_m);
        v.field("heterogeneous_radius", s.heterogeneous_radius);
        v.field("radius_min_m", s.radius_min_m);
        v.field("radius_max_m", s.radius_max_m);
        v.field("beta", s.beta);
        v.field("extent_m", s.extent_m);
        v.field("road_spacing_m", s.road_spacing_m);
        v.field("min_vehicle_gap_m", s.min_vehicle_gap_m);
        v.field("pedestrians", s.pedestrians);
        v.field("vehicle_speed_min", s.vehicle_speed_min);
        v.field("vehicle_speed_max", s.vehicle_speed_max);
        v.field("pedestrian_speed_min", s.pedestrian_speed_min);
        v.field("pedestrian_speed_max", s.pedestrian_speed_max);
        v.field("latent_dim", s.latent_dim);
        v.field("duration_s", s.duration_s);
        v.field("hardware_min", s.hardware_min);
        v.field("hardware_max", s.hardware_max);
        v.field("seed", s.seed);
    });
    v.section("radio", [&] {
        v.field("path_loss_exponent", c.radio.path_loss_exponent);
        v.field("snr_ref_db", c.radio.snr_ref_db);
        v.field("shadowing_sigma_db", c.radio.shadowing_sigma_db);
        v.field("coherence_s", c.radio.coherence_s);
        v.field("downlink_bandwidth_hz", c.downlink_bandwidth_hz);
    });
    v.section("edge", [&] { v.field("server_multipliers", c.server_multipliers); });
    v.section("control", [&] {
        v.field("head_period_s", c.control.head_period_s);
        v.field("schedule_cell_m", c.control.schedule_cell_m);
        v.field("metric_cell_m", c.control.metric_cell_m);
        v.field("metric_interval_s", c.control.metric_interval_s);
        v.field("sync_period_steps", c.control.sync_period_steps);
    });
    v.section("measurement", [&] {
        auto& m = c.measurement;
        v.field("onboard_mean_s", m.onboard_mean_s);
        v.field("edge_mean_s", m.edge_mean_s);
        v.field("uplink_mean_bits", m.uplink_mean_bits);
        v.field("downlink_mean_bits", m.downlink_mean_bits);
        v.field("time_sigma_log", m.time_sigma_log);
        v.field("size_sigma_log", m.size_sigma_log);
    });
    v.section("sensing", [&] {
        v.field("position_sigma_m", c.sensing.position_sigma_m);
        v.field("feature_sigma", c.sensing.feature_sigma);
        v.field("confidence_min", c.sensing.confidence_min);
        v.field("confidence_max", c.sensing.confidence_max);
    });
    v.section("matching", [&] {
        v.field("geo_weight", c.matching.geo_weight);
        v.field("gate_m", c.matching.gate_m);
        v.field("threshold", c.matching.threshold);
        v.field("ttl_s", c.map.ttl_s);
        v.field("feature_cap", c.map.feature_cap);
        v.field("history_cap", c.map.history_cap);
    });
    v.section("rl", [&] {
        auto& p = c.rl;
        v.field("hidden", p.hidden);
        v.field("learning_rate", p.learning_rate);
        v.field("gamma", p.gamma);
        v.field("batch_size", p.batch_size);
        v.field("epsilon_start", p.epsilon_start);
        v.field("epsilon_end", p.epsilon_end);
        v.field("epsilon_decay", p.epsilon_decay);
        v.field("target_sync", p.target_sync);
        v.field("beta_start", p.beta_start);
        v.field("beta_anneal_steps", p.beta_anneal_steps);
        v.field("leak", p.leak);
        v.field("replay_capacity", p.replay.capacity);
        v.field("priority_alpha", p.replay.alpha);
        v.field("priority_floor", p.replay.priority_floor);
        v.field("train_steps", c.train.train_steps);
        v.field("log_every", c.train.log_every);
    });
    v.section("rm", [&] {
        v.field("warmup_tasks", c.rm.warmup_tasks);
        v.field("ridge", c.rm.ridge);
    });
    v.section("output", [&] {
        v.field("write_deltas", c.output.write_deltas);
        v.field("write_local_tasks", c.output.write_local_tasks);
    });
}

class Reader {
public:
    explicit Reader(const json& root) : current_(&root) {}

    void section(const char* name, const std::function<void()>& body) {
        seen_top_.insert(name);
        auto it = current_->find(name);
        if (it == current_->end()) return;
        if (!it->is_object()) throw ConfigError(name, "expected an object");
        const json* saved = current_;
        current_ = &*it;
        prefix_ = std::string(name) + ".";
        seen_.clear();
        body();
        for (const auto& [key, _] : current_->items()) {
            if (!seen_.count(key)) throw ConfigError(prefix_ + key, "unknown key");
        }
        current_ = saved;
        prefix_.clear();
    }

    template <class T>
    void field(const char* name, T& out) {
        seen_.insert(name);
        auto it = current_->find(name);
        if (it == current_->end()) return;
        read(*it, prefix_ + name, out);
    }

    void check_top(const json& root) const {
        for (const auto& [key, _] : root.items()) {
            if (key != "schema_version" && !seen_top_.count(key)) throw ConfigError(key, "unknown section");
        }
    }

private:
    static void read(const json& j, const std::string& path, double& out) {
        if (!j.is_number()) throw ConfigError(path, "expected a number");
        out = j.get<double>();
    }
    static void read(const json& j, const std::string& path, bool& out) {
        if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
        out = j.get<bool>();
    }
    template <class I>
        requires std::is_integral_v<I>
    static void read(const json& j, const std::string& path, I& out) {
        if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
        if constexpr (std::is_unsigned_v<I>) {
            if (j.is_number_unsigned()) {
                out = static_cast<I>(j.get<std::uint64_t>());
                return;
            }
            if (j.get<std::int64_t>() < 0) throw ConfigError(path, "must be non-negative");
        }
        out = static_cast<I>(j.get<std::int64_t>());
    }
    template <class E>
    static void read(const json& j, const std::string& path, std::vector<E>& out) {
        if (!j.is_array()) throw ConfigError(path, "expected an array");
        out.clear();
        for (std::size_t i = 0; i < j.size(); ++i) {
            E e{};
            read(j[i], path + "[" + std::to_string(i) + "]", e);
            out.push_back(e);
        }
    }

    const json* current_;
    std::string prefix_;
    std::set<std::string> seen_;
    std::set<std::string> seen_top_;
};

class Writer {
public:
    void section(const char* name, const std::function<void()>& body) {
        current_ = &root_[name];
        *current_ = json::object();
        body();
    }
    template <class T>
    void field(const char* name, T& value) {
        (*current_)[name] = value;
    }
    json& root() { return root_; }

private:
    json root_ = json::object();
    json* current_ = nullptr;
};

void require(bool ok, const char* path, const char* msg) {
    if (!ok) throw ConfigError(path, msg);
}

} // namespace

std::vector<double> ExperimentConfig::effective_server_multipliers() const {
    if (!server_multipliers.empty()) return server_multipliers;
    return std::vector<double>(static_cast<std::size_t>(scenario.servers), 1.0);
}

void validate(const ExperimentConfig& c) {
    scenario::ScenarioConfig s = c.scenario;
    s.max_partition = c.max_partition();
    scenario::validate(c.measurement);
    scenario::validate(s);
    require(c.radio.coherence_s > 0, "radio.coherence_s", "must be positive");
    require(c.radio.shadowing_sigma_db >= 0, "radio.shadowing_sigma_db", "must be non-negative");
    require(c.radio.path_loss_exponent > 0, "radio.path_loss_exponent", "must be positive");
    require(c.downlink_bandwidth_hz >= 0, "radio.downlink_bandwidth_hz", "must be non-negative");
    if (!c.server_multipliers.empty()) {
        require(c.server_multipliers.size() == static_cast<std::size_t>(c.scenario.servers), "edge.server_multipliers",
                "needs one entry per server");
        for (double m : c.server_multipliers) require(m > 0, "edge.server_multipliers", "entries must be positive");
    }
    require(c.control.head_period_s > 0, "control.head_period_s", "must be positive");
    require(c.control.schedule_cell_m > 0, "control.schedule_cell_m", "must be positive");
    require(c.control.metric_cell_m > 0, "control.metric_cell_m", "must be positive");
    require(c.control.metric_interval_s > 0, "control.metric_interval_s", "must be positive");
    require(c.control.sync_period_steps >= 0, "control.sync_period_steps", "must be non-negative");
    require(c.sensing.position_sigma_m >= 0, "sensing.position_sigma_m", "must be non-negative");
    require(c.sensing.feature_sigma >= 0, "sensing.feature_sigma", "must be non-negative");
    require(c.sensing.confidence_min > 0 && c.sensing.confidence_max <= 1 &&
                c.sensing.confidence_min <= c.sensing.confidence_max,
            "sensing.confidence_min", "confidences must satisfy 0 < min <= max <= 1");
    require(c.matching.gate_m > 0, "matching.gate_m", "must be positive");
    require(c.matching.geo_weight >= 0, "matching.geo_weight", "must be non-negative");
    require(c.matching.threshold >= 0, "matching.threshold", "must be non-negative");
    require(c.map.ttl_s > 0, "matching.ttl_s", "must be positive");
    require(c.map.feature_cap > 0, "matching.feature_cap", "must be positive");
    require(c.map.history_cap >= 2, "matching.history_cap", "must be at least 2");
    require(!c.rl.hidden.empty(), "rl.hidden", "needs at least one hidden layer");
    for (int h : c.rl.hidden) require(h > 0, "rl.hidden", "layer sizes must be positive");
    require(c.rl.learning_rate > 0, "rl.learning_rate", "must be positive");
    require(c.rl.gamma >= 0 && c.rl.gamma < 1, "rl.gamma", "must lie in [0, 1)");
    require(c.rl.batch_size > 0, "rl.batch_size", "must be positive");
    require(c.rl.epsilon_end >= 0 && c.rl.epsilon_start <= 1 && c.rl.epsilon_end <= c.rl.epsilon_start,
            "rl.epsilon_end", "epsilons must satisfy 0 <= end <= start <= 1");
    require(c.rl.epsilon_decay > 0 && c.rl.epsilon_decay <= 1, "rl.epsilon_decay", "must lie in (0, 1]");
    require(c.rl.target_sync > 0, "rl.target_sync", "must be positive");
    require(c.rl.replay.capacity >= c.rl.batch_size, "rl.replay_capacity", "must hold at least one batch");
    require(c.rl.replay.priority_floor > 0, "rl.priority_floor", "must be positive");
    require(c.train.train_steps >= 0, "rl.train_steps", "must be non-negative");
    require(c.train.log_every > 0, "rl.log_every", "must be positive");
    require(c.rm.warmup_tasks > 0, "rm.warmup_tasks", "must be positive");
    require(c.rm.ridge >= 0, "rm.ridge", "must be non-negative");
}

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<document>", std::string("not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("<document>", "expected a JSON object");
    auto ver = root.find("schema_version");
    if (ver == root.end()) throw ConfigError("schema_version", "missing");
    if (!ver->is_number_integer() || ver->get<int>() != kConfigSchemaVersion) {
        throw ConfigError("schema_version", "unsupported version; expected " + std::to_string(kConfigSchemaVersion));
    }
    ExperimentConfig c;
    Reader reader(root);
    visit(c, reader);
    reader.check_top(root);
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const ExperimentConfig& config) {
    ExperimentConfig copy = config;
    Writer w;
    visit(copy, w);
    json root = std::move(w.root());
    root["schema_version"] = kConfigSchemaVersion;
    return root.dump(2) + "\n";
}

} // namespace livemap
