#pragma once

// Synthetic world: vehicles on a grid road network, pedestrians on random
// waypoints, ground-truth latent features, idealized noisy sensing and the
// stage-budget measurement model that drives the simulator.

#include "livemap/common.hpp"
#include "livemap/map_core.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace livemap::scenario {

struct ScenarioConfig {
    int vehicles = 50;
    int servers = 5;
    double bandwidth_hz = 1e5;
    double coverage_radius_m = 50.0;
    bool heterogeneous_radius = false; // draw per-vehicle radii from [radius_min_m, radius_max_m]
    double radius_min_m = 25.0;
    double radius_max_m = 75.0;
    double beta = 0.8;
    int max_partition = 4; // partitions are 0..max_partition
    double extent_m = 300.0;
    double road_spacing_m = 100.0;
    double min_vehicle_gap_m = 5.0;
    int pedestrians = 100;
    double vehicle_speed_min = 8.0;
    double vehicle_speed_max = 15.0;
    double pedestrian_speed_min = 0.5;
    double pedestrian_speed_max = 2.0;
    int latent_dim = 32;
    double duration_s = 60.0;
    double hardware_min = 0.5;
    double hardware_max = 1.5;
    std::uint64_t seed = 1;
};

/// Throws ConfigError naming the offending field.
void validate(const ScenarioConfig& config);

/// Piecewise-linear path; clamps outside its time range.
struct Trajectory {
    std::vector<map::TimedPoint> points; // strictly increasing t

    WorldPoint at(double t) const;
};

struct GroundTruthObject {
    std::int64_t id = 0;
    int class_id = map::kVehicle;
    Trajectory trajectory;
    map::FeatureVector latent;
};

struct VehicleSpec {
    int id = 0; // also its ground-truth object id
    double radius_m = 50.0;
    double cpu_multiplier = 1.0;
    double gpu_multiplier = 1.0;

    /// Combined onboard speed-up applied to onboard compute time.
    double onboard_multiplier() const;
};

struct World {
    ScenarioConfig config;
    WorldPoint base_station;
    std::vector<VehicleSpec> vehicles;
    std::vector<GroundTruthObject> objects; // vehicles first (id == vehicle id), then pedestrians

    WorldPoint vehicle_position(int vehicle, double t) const {
        return objects[static_cast<std::size_t>(vehicle)].trajectory.at(t);
    }
};

World generate(const ScenarioConfig& config, std::uint64_t seed);

/// JSON trace of the whole world (config echo, waypoints, latents) and its reader.
void export_world(const World& world, const std::string& path);
World import_world(const std::string& path);

struct SensingNoise {
    double position_sigma_m = 0.3;
    double feature_sigma = 0.2;
    double confidence_min = 0.5;
    double confidence_max = 1.0;
};

struct Detection {
    std::int64_t truth_id = 0;
    int class_id = 0;
    WorldPoint location;
    map::FeatureVector feature;
    double confidence = 1.0;
    int source_vehicle = 0;
    double timestamp = 0.0;
};

/// One detection per other ground-truth object inside the vehicle's coverage
/// disk, in ascending object id.
std::vector<Detection> sense(const World& world, int vehicle, double t, const SensingNoise& noise,
                             std::mt19937_64& rng);

/// Synthetic per-partition stage-time and payload distributions. Times are
/// lognormal with the given means; sizes likewise. Zero means give zero draws.
struct MeasurementModel {
    std::vector<double> onboard_mean_s{0.010, 0.060, 0.080, 0.100, 0.250};
    std::vector<double> edge_mean_s{0.050, 0.035, 0.030, 0.012, 0.0};
    std::vector<double> uplink_mean_bits{100000.0, 16000.0, 12000.0, 1800.0, 0.0};
    double downlink_mean_bits = 300.0;
    double time_sigma_log = 0.25;
    double size_sigma_log = 0.25;

    int max_partition() const { return static_cast<int>(onboard_mean_s.size()) - 1; }
};

/// Throws ConfigError unless the model is well-formed and monotone in the partition.
void validate(const MeasurementModel& model);

struct StageBudgets {
    double onboard_s = 0.0;
    double uplink_bits = 0.0;
    double edge_s = 0.0;
    double downlink_bits = 0.0;
};

/// Draws the stages for partition y. Onboard time is divided by the vehicle's
/// onboard multiplier here and nowhere else. y = -1 is a local-only task: the
/// full onboard pipeline and nothing else.
StageBudgets draw_budgets(const MeasurementModel& model, int y, double onboard_multiplier, std::mt19937_64& rng);

} // namespace livemap::scenario
