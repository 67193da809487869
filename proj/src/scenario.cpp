#include "livemap/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace livemap::scenario {

namespace {

// Trajectories extend past the run so late lookups stay on the path.
constexpr double kHorizonMargin = 10.0;

void require(bool ok, const char* field, const std::string& msg) {
    if (!ok) throw ConfigError(std::string("scenario.") + field, msg);
}

struct RoadGrid {
    int n = 0; // nodes per side minus one
    double spacing = 0.0;

    WorldPoint node(int i, int j) const { return {i * spacing, j * spacing, 0.0}; }
};

struct Slot {
    WorldPoint p;
    int ai, aj, bi, bj; // edge endpoints (equal for a node slot)
};

std::vector<Slot> road_slots(const RoadGrid& g, double gap) {
    std::vector<Slot> slots;
    const int per_edge = static_cast<int>(std::floor(g.spacing / gap));
    for (int i = 0; i <= g.n; ++i) {
        for (int j = 0; j <= g.n; ++j) {
            slots.push_back({g.node(i, j), i, j, i, j});
            // Edges leaving (i, j) toward +x and +y.
            const int dirs[2][2] = {{1, 0}, {0, 1}};
            for (const auto& d : dirs) {
                const int bi = i + d[0], bj = j + d[1];
                if (bi > g.n || bj > g.n) continue;
                for (int k = 1; k < per_edge; ++k) {
                    const double off = k * gap;
                    if (off >= g.spacing) break;
                    WorldPoint p = g.node(i, j);
                    p.x += d[0] * off;
                    p.y += d[1] * off;
                    slots.push_back({p, i, j, bi, bj});
                }
            }
        }
    }
    return slots;
}

std::vector<std::pair<int, int>> neighbours(const RoadGrid& g, int i, int j) {
    std::vector<std::pair<int, int>> out;
    if (i > 0) out.emplace_back(i - 1, j);
    if (i < g.n) out.emplace_back(i + 1, j);
    if (j > 0) out.emplace_back(i, j - 1);
    if (j < g.n) out.emplace_back(i, j + 1);
    return out;
}

Trajectory vehicle_route(const RoadGrid& g, const Slot& start, double speed, double horizon,
                         std::mt19937_64& rng) {
    Trajectory tr;
    double t = 0.0;
    tr.points.push_back({t, start.p});
    int pi = start.ai, pj = start.aj, ci = start.bi, cj = start.bj;
    if (pi == ci && pj == cj) {
        // Starting on a node: pick any neighbour as the first target.
        auto nb = neighbours(g, pi, pj);
        std::uniform_int_distribution<std::size_t> pick(0, nb.size() - 1);
        std::tie(ci, cj) = nb[pick(rng)];
    } else if (std::bernoulli_distribution(0.5)(rng)) {
        std::swap(pi, ci);
        std::swap(pj, cj);
    }
    WorldPoint here = start.p;
    while (t < horizon) {
        const WorldPoint target = g.node(ci, cj);
        const double len = ground_distance(here, target);
        if (len > 0.0) {
            t += len / speed;
            tr.points.push_back({t, target});
        }
        here = target;
        auto nb = neighbours(g, ci, cj);
        std::vector<std::pair<int, int>> forward;
        for (auto& n : nb) {
            if (!(n.first == pi && n.second == pj)) forward.push_back(n);
        }
        if (forward.empty()) forward = nb;
        std::uniform_int_distribution<std::size_t> pick(0, forward.size() - 1);
        pi = ci;
        pj = cj;
        std::tie(ci, cj) = forward[pick(rng)];
    }
    return tr;
}

Trajectory pedestrian_route(double side, double vmin, double vmax, double horizon, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coord(0.0, side);
    std::uniform_real_distribution<double> speed(vmin, vmax);
    Trajectory tr;
    double t = 0.0;
    WorldPoint here{coord(rng), coord(rng), 0.0};
    tr.points.push_back({t, here});
    while (t < horizon) {
        const WorldPoint next{coord(rng), coord(rng), 0.0};
        const double len = ground_distance(here, next);
        if (len < 1e-6) continue;
        t += len / speed(rng);
        tr.points.push_back({t, next});
        here = next;
    }
    return tr;
}

double lognormal_draw(double mean, double sigma, double z) {
    if (mean <= 0.0) return 0.0;
    const double mu = std::log(mean) - 0.5 * sigma * sigma;
    return std::exp(mu + sigma * z);
}

} // namespace

void validate(const ScenarioConfig& c) {
    require(c.vehicles > 0, "vehicles", "must be positive");
    require(c.servers > 0, "servers", "must be positive");
    require(c.bandwidth_hz > 0.0, "bandwidth_hz", "must be positive");
    require(c.coverage_radius_m > 0.0, "coverage_radius_m", "must be positive");
    require(c.radius_min_m > 0.0, "radius_min_m", "must be positive");
    require(c.radius_max_m >= c.radius_min_m, "radius_max_m", "must be at least radius_min_m");
    require(c.beta >= 0.0 && c.beta <= 1.0, "beta", "must lie in [0, 1]");
    require(c.max_partition >= 1, "max_partition", "must be at least 1");
    require(c.extent_m > 0.0, "extent_m", "must be positive");
    require(c.road_spacing_m > 0.0, "road_spacing_m", "must be positive");
    require(c.min_vehicle_gap_m > 0.0, "min_vehicle_gap_m", "must be positive");
    require(c.pedestrians >= 0, "pedestrians", "must be non-negative");
    require(c.vehicle_speed_min > 0.0 && c.vehicle_speed_max >= c.vehicle_speed_min, "vehicle_speed_max",
            "speeds must satisfy 0 < min <= max");
    require(c.pedestrian_speed_min > 0.0 && c.pedestrian_speed_max >= c.pedestrian_speed_min,
            "pedestrian_speed_max", "speeds must satisfy 0 < min <= max");
    require(c.latent_dim > 0, "latent_dim", "must be positive");
    require(c.duration_s > 0.0, "duration_s", "must be positive");
    require(c.hardware_min > 0.0 && c.hardware_max >= c.hardware_min, "hardware_max",
            "multipliers must satisfy 0 < min <= max");
}

WorldPoint Trajectory::at(double t) const {
    if (points.empty()) return {};
    if (t <= points.front().t) return points.front().p;
    if (t >= points.back().t) return points.back().p;
    auto hi = std::upper_bound(points.begin(), points.end(), t,
                               [](double v, const map::TimedPoint& p) { return v < p.t; });
    auto lo = hi - 1;
    const double f = (t - lo->t) / (hi->t - lo->t);
    return {lo->p.x + f * (hi->p.x - lo->p.x), lo->p.y + f * (hi->p.y - lo->p.y),
            lo->p.z + f * (hi->p.z - lo->p.z)};
}

double VehicleSpec::onboard_multiplier() const { return std::sqrt(cpu_multiplier * gpu_multiplier); }

World generate(const ScenarioConfig& config, std::uint64_t seed) {
    validate(config);
    RoadGrid grid;
    grid.spacing = config.road_spacing_m;
    grid.n = static_cast<int>(std::floor(config.extent_m / config.road_spacing_m + 1e-9));
    require(grid.n >= 1, "extent_m", "smaller than one road block; no road network fits");
    const double side = grid.n * grid.spacing;

    std::vector<Slot> slots = road_slots(grid, config.min_vehicle_gap_m);
    require(slots.size() >= static_cast<std::size_t>(config.vehicles), "vehicles",
            "cannot place " + std::to_string(config.vehicles) + " vehicles " +
                std::to_string(config.min_vehicle_gap_m) + " m apart; the road network holds " +
                std::to_string(slots.size()));

    std::mt19937_64 rng(seed);
    World w;
    w.config = config;
    w.base_station = {side / 2.0, side / 2.0, 0.0};
    const double horizon = config.duration_s + kHorizonMargin;

    // Partial Fisher-Yates picks distinct start slots.
    for (int v = 0; v < config.vehicles; ++v) {
        std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(v), slots.size() - 1);
        std::swap(slots[static_cast<std::size_t>(v)], slots[pick(rng)]);
    }

    std::uniform_real_distribution<double> vspeed(config.vehicle_speed_min, config.vehicle_speed_max);
    std::uniform_real_distribution<double> hw(config.hardware_min, config.hardware_max);
    std::uniform_real_distribution<double> radius(config.radius_min_m, config.radius_max_m);
    std::normal_distribution<double> latent(0.0, 1.0);

    auto make_latent = [&] {
        map::FeatureVector z(static_cast<std::size_t>(config.latent_dim));
        for (auto& v : z) v = latent(rng);
        return z;
    };

    for (int v = 0; v < config.vehicles; ++v) {
        VehicleSpec spec;
        spec.id = v;
        spec.radius_m = config.heterogeneous_radius ? radius(rng) : config.coverage_radius_m;
        spec.cpu_multiplier = hw(rng);
        spec.gpu_multiplier = hw(rng);
        w.vehicles.push_back(spec);

        GroundTruthObject o;
        o.id = v;
        o.class_id = map::kVehicle;
        o.trajectory = vehicle_route(grid, slots[static_cast<std::size_t>(v)], vspeed(rng), horizon, rng);
        o.latent = make_latent();
        w.objects.push_back(std::move(o));
    }
    for (int p = 0; p < config.pedestrians; ++p) {
        GroundTruthObject o;
        o.id = config.vehicles + p;
        o.class_id = map::kPedestrian;
        o.trajectory = pedestrian_route(side, config.pedestrian_speed_min, config.pedestrian_speed_max, horizon, rng);
        o.latent = make_latent();
        w.objects.push_back(std::move(o));
    }
    return w;
}

void export_world(const World& world, const std::string& path) {
    using nlohmann::json;
    json j;
    j["format"] = "livemap-world-1";
    const ScenarioConfig& c = world.config;
    j["config"] = {{"vehicles", c.vehicles},         {"pedestrians", c.pedestrians},
                   {"extent_m", c.extent_m},         {"road_spacing_m", c.road_spacing_m},
                   {"latent_dim", c.latent_dim},     {"duration_s", c.duration_s},
                   {"coverage_radius_m", c.coverage_radius_m}};
    j["base_station"] = {world.base_station.x, world.base_station.y};
    json vehicles = json::array();
    for (const auto& v : world.vehicles) {
        vehicles.push_back({{"id", v.id}, {"radius_m", v.radius_m}, {"cpu", v.cpu_multiplier}, {"gpu", v.gpu_multiplier}});
    }
    j["vehicles"] = std::move(vehicles);
    json objects = json::array();
    for (const auto& o : world.objects) {
        json pts = json::array();
        for (const auto& p : o.trajectory.points) pts.push_back({p.t, p.p.x, p.p.y});
        objects.push_back({{"id", o.id}, {"class", o.class_id}, {"latent", o.latent}, {"waypoints", std::move(pts)}});
    }
    j["objects"] = std::move(objects);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write world trace " + path);
    out << j.dump() << '\n';
}

World import_world(const std::string& path) {
    using nlohmann::json;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open world trace " + path);
    World w;
    try {
        const json j = json::parse(in);
        if (j.at("format") != "livemap-world-1") throw IoError(path + ": unknown world trace format");
        const json& c = j.at("config");
        w.config.vehicles = c.at("vehicles");
        w.config.pedestrians = c.at("pedestrians");
        w.config.extent_m = c.at("extent_m");
        w.config.road_spacing_m = c.at("road_spacing_m");
        w.config.latent_dim = c.at("latent_dim");
        w.config.duration_s = c.at("duration_s");
        w.config.coverage_radius_m = c.at("coverage_radius_m");
        w.base_station = {j.at("base_station").at(0), j.at("base_station").at(1), 0.0};
        for (const auto& v : j.at("vehicles")) {
            w.vehicles.push_back({v.at("id"), v.at("radius_m"), v.at("cpu"), v.at("gpu")});
        }
        for (const auto& o : j.at("objects")) {
            GroundTruthObject g;
            g.id = o.at("id");
            g.class_id = o.at("class");
            g.latent = o.at("latent").get<map::FeatureVector>();
            for (const auto& p : o.at("waypoints")) {
                g.trajectory.points.push_back({p.at(0), WorldPoint{p.at(1), p.at(2), 0.0}});
            }
            w.objects.push_back(std::move(g));
        }
    } catch (const json::exception& e) {
        throw IoError(path + ": malformed world trace: " + e.what());
    }
    return w;
}

std::vector<Detection> sense(const World& world, int vehicle, double t, const SensingNoise& noise,
                             std::mt19937_64& rng) {
    const VehicleSpec& spec = world.vehicles.at(static_cast<std::size_t>(vehicle));
    const WorldPoint here = world.vehicle_position(vehicle, t);
    const double r2 = spec.radius_m * spec.radius_m;
    std::normal_distribution<double> pos(0.0, noise.position_sigma_m > 0 ? noise.position_sigma_m : 1.0);
    std::normal_distribution<double> feat(0.0, noise.feature_sigma > 0 ? noise.feature_sigma : 1.0);
    std::uniform_real_distribution<double> conf(noise.confidence_min, noise.confidence_max);

    std::vector<Detection> out;
    for (const auto& o : world.objects) {
        if (o.id == vehicle) continue;
        const WorldPoint p = o.trajectory.at(t);
        if (ground_distance_sq(p, here) > r2) continue;
        Detection d;
        d.truth_id = o.id;
        d.class_id = o.class_id;
        d.location = p;
        if (noise.position_sigma_m > 0) {
            d.location.x += pos(rng);
            d.location.y += pos(rng);
        }
        d.feature = o.latent;
        if (noise.feature_sigma > 0) {
            for (auto& v : d.feature) v += feat(rng);
        }
        d.confidence = noise.confidence_max > noise.confidence_min ? conf(rng) : noise.confidence_max;
        d.source_vehicle = vehicle;
        d.timestamp = t;
        out.push_back(std::move(d));
    }
    return out;
}

void validate(const MeasurementModel& m) {
    auto field = [](const char* f, const std::string& msg) { throw ConfigError(std::string("measurement.") + f, msg); };
    const std::size_t n = m.onboard_mean_s.size();
    if (n < 2) field("onboard_mean_s", "needs at least two partitions");
    if (m.edge_mean_s.size() != n) field("edge_mean_s", "must have one entry per partition");
    if (m.uplink_mean_bits.size() != n) field("uplink_mean_bits", "must have one entry per partition");
    for (std::size_t y = 0; y < n; ++y) {
        if (!(m.onboard_mean_s[y] >= 0)) field("onboard_mean_s", "entries must be non-negative");
        if (!(m.edge_mean_s[y] >= 0)) field("edge_mean_s", "entries must be non-negative");
        if (!(m.uplink_mean_bits[y] >= 0)) field("uplink_mean_bits", "entries must be non-negative");
        if (y == 0) continue;
        if (m.onboard_mean_s[y] < m.onboard_mean_s[y - 1]) field("onboard_mean_s", "must be non-decreasing in the partition");
        if (m.edge_mean_s[y] > m.edge_mean_s[y - 1]) field("edge_mean_s", "must be non-increasing in the partition");
        if (m.uplink_mean_bits[y] >= m.uplink_mean_bits[y - 1]) {
            field("uplink_mean_bits", "must be strictly decreasing in the partition");
        }
    }
    if (m.onboard_mean_s.back() <= 0) field("onboard_mean_s", "full-local onboard time must be positive");
    if (m.uplink_mean_bits.back() != 0 || m.edge_mean_s.back() != 0) {
        field("uplink_mean_bits", "the full-local partition must not use the uplink or the edge");
    }
    if (!(m.downlink_mean_bits >= 0)) field("downlink_mean_bits", "must be non-negative");
    if (!(m.time_sigma_log >= 0)) field("time_sigma_log", "must be non-negative");
    if (!(m.size_sigma_log >= 0)) field("size_sigma_log", "must be non-negative");
}

StageBudgets draw_budgets(const MeasurementModel& model, int y, double onboard_multiplier, std::mt19937_64& rng) {
    const int n = model.max_partition();
    if (y < -1 || y > n) throw InvalidInput("draw_budgets: partition out of range");
    if (!(onboard_multiplier > 0)) throw InvalidInput("draw_budgets: multiplier must be positive");
    // Always consume four normals so the stream position does not depend on y.
    std::normal_distribution<double> z(0.0, 1.0);
    const double z_on = z(rng), z_up = z(rng), z_edge = z(rng), z_down = z(rng);
    const bool local = y < 0;
    const auto k = static_cast<std::size_t>(local ? n : y);
    StageBudgets b;
    b.onboard_s = lognormal_draw(model.onboard_mean_s[k], model.time_sigma_log, z_on) / onboard_multiplier;
    if (local) return b;
    b.uplink_bits = lognormal_draw(model.uplink_mean_bits[k], model.size_sigma_log, z_up);
    b.edge_s = lognormal_draw(model.edge_mean_s[k], model.time_sigma_log, z_edge);
    b.downlink_bits = lognormal_draw(model.downlink_mean_bits, model.size_sigma_log, z_down);
    return b;
}

} // namespace livemap::scenario
