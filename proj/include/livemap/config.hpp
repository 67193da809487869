#pragma once

// Experiment configuration: every tunable in one value, loaded from a
// versioned JSON document. Unknown keys and type mismatches are rejected with
// the dotted path of the offending field.

#include "livemap/map_core.hpp"
#include "livemap/rl.hpp"
#include "livemap/scenario.hpp"
#include "livemap/simnet.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace livemap {

inline constexpr int kConfigSchemaVersion = 1;

struct ControlParams {
    double head_period_s = 1.0;
    double schedule_cell_m = 2.0;
    double metric_cell_m = 5.0;
    double metric_interval_s = 0.1;
    std::int64_t sync_period_steps = 0; // 0 shares the policy instantly
};

struct TrainParams {
    std::int64_t train_steps = 20000;
    std::int64_t log_every = 100;
};

struct RmParams {
    std::int64_t warmup_tasks = 5000;
    double ridge = 1e-6;
};

struct OutputParams {
    bool write_deltas = true;
    bool write_local_tasks = true;
};

struct ExperimentConfig {
    scenario::ScenarioConfig scenario;
    sim::RadioParams radio;             // base station is placed by the world generator
    double downlink_bandwidth_hz = 0.0; // 0 uses the uplink bandwidth
    std::vector<double> server_multipliers; // empty: 1.0 for every server
    ControlParams control;
    scenario::MeasurementModel measurement;
    scenario::SensingNoise sensing;
    map::MatchParams matching;
    map::MapParams map;
    rl::PolicyParams rl;
    TrainParams train;
    RmParams rm;
    OutputParams output;

    int max_partition() const { return measurement.max_partition(); }
    std::vector<double> effective_server_multipliers() const;
};

/// Throws ConfigError on the first inconsistent field.
void validate(const ExperimentConfig& config);

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string dump_config(const ExperimentConfig& config);

} // namespace livemap
