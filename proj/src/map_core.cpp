#include "livemap/map_core.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace livemap::map {

namespace {

bool finite(double v) { return std::isfinite(v); }

double squared_l2(const FeatureVector& a, const FeatureVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace

Pose Pose::from_yaw(double yaw, const WorldPoint& t) {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    Pose p;
    p.m = {c, -s, 0, t.x, s, c, 0, t.y, 0, 0, 1, t.z, 0, 0, 0, 1};
    return p;
}

void validate_pose(const Pose& pose) {
    for (double v : pose.m) {
        if (!finite(v)) throw InvalidInput("pose: non-finite entry");
    }
    if (pose.at(3, 0) != 0.0 || pose.at(3, 1) != 0.0 || pose.at(3, 2) != 0.0 ||
        pose.at(3, 3) != 1.0) {
        throw InvalidInput("pose: bottom row must be (0, 0, 0, 1)");
    }
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double dot = 0.0;
            for (int k = 0; k < 3; ++k) dot += pose.at(k, i) * pose.at(k, j);
            const double expected = i == j ? 1.0 : 0.0;
            if (std::abs(dot - expected) > 1e-6) {
                throw InvalidInput("pose: rotation block is not orthonormal");
            }
        }
    }
}

Pose invert(const Pose& pose) {
    validate_pose(pose);
    Pose inv;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) inv.at(r, c) = pose.at(c, r);
    }
    for (int r = 0; r < 3; ++r) {
        double t = 0.0;
        for (int k = 0; k < 3; ++k) t -= pose.at(k, r) * pose.at(k, 3);
        inv.at(r, 3) = t;
    }
    return inv;
}

CameraPoint pixel_to_camera(const PixelBox& box, double depth, const CameraIntrinsics& intr) {
    if (!(depth > 0.0) || !finite(depth)) throw InvalidInput("pixel_to_camera: depth must be positive");
    if (!(intr.focal_px > 0.0) || intr.width_px <= 0 || intr.height_px <= 0) {
        throw InvalidInput("pixel_to_camera: invalid intrinsics");
    }
    if (box.u0 < 0.0 || box.u0 >= intr.width_px || box.v0 < 0.0 || box.v0 >= intr.height_px) {
        throw InvalidInput("pixel_to_camera: box center outside image");
    }
    const double f = intr.focal_px;
    return CameraPoint{
        -(depth * (box.v0 - 0.5 * intr.height_px)) / f,
        (depth * (box.u0 - 0.5 * intr.width_px)) / f,
        depth,
    };
}

std::array<double, 3> camera_to_pixel(const CameraPoint& p, const CameraIntrinsics& intr) {
    if (!(p.z > 0.0)) throw InvalidInput("camera_to_pixel: point behind camera");
    const double f = intr.focal_px;
    const double u0 = p.y * f / p.z + 0.5 * intr.width_px;
    const double v0 = -p.x * f / p.z + 0.5 * intr.height_px;
    return {u0, v0, p.z};
}

WorldPoint camera_to_world(const CameraPoint& p, const Pose& pose) {
    validate_pose(pose);
    const double in[4] = {p.x, p.y, p.z, 1.0};
    double out[3] = {0.0, 0.0, 0.0};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) out[r] += pose.at(r, c) * in[c];
    }
    return WorldPoint{out[0], out[1], out[2]};
}

double trimmed_patch_mean(std::span<const double> patch_means) {
    if (patch_means.size() < 3) throw NoDepthError("fewer than 3 patches with valid depth");
    const auto [lo, hi] = std::minmax_element(patch_means.begin(), patch_means.end());
    double sum = 0.0;
    for (auto it = patch_means.begin(); it != patch_means.end(); ++it) {
        if (it != lo && it != hi) sum += *it;
    }
    return sum / static_cast<double>(patch_means.size() - 2);
}

double estimate_depth(const DepthImage& image, const PixelBox& box, std::uint64_t seed,
                      const DepthSampling& sampling) {
    if (image.width <= 0 || image.height <= 0 ||
        image.meters.size() != static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height)) {
        throw InvalidInput("estimate_depth: malformed depth image");
    }
    if (box.u0 < 0.0 || box.u0 >= image.width || box.v0 < 0.0 || box.v0 >= image.height ||
        !(box.width > 0.0) || !(box.height > 0.0)) {
        throw InvalidInput("estimate_depth: box outside image");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> du(box.u0 - 0.25 * box.width, box.u0 + 0.25 * box.width);
    std::uniform_real_distribution<double> dv(box.v0 - 0.25 * box.height, box.v0 + 0.25 * box.height);

    const int half = sampling.patch_size / 2;
    std::vector<double> means;
    means.reserve(static_cast<std::size_t>(sampling.patches));
    for (int k = 0; k < sampling.patches; ++k) {
        const int cu = static_cast<int>(std::lround(du(rng)));
        const int cv = static_cast<int>(std::lround(dv(rng)));
        double sum = 0.0;
        int valid = 0;
        for (int r = cv - half; r < cv - half + sampling.patch_size; ++r) {
            if (r < 0 || r >= image.height) continue;
            for (int c = cu - half; c < cu - half + sampling.patch_size; ++c) {
                if (c < 0 || c >= image.width) continue;
                const double d = image.at(r, c);
                if (d > 0.0) {
                    sum += d;
                    ++valid;
                }
            }
        }
        if (valid > 0) means.push_back(sum / valid);
    }
    return trimmed_patch_mean(means);
}

WorldPoint predict_location(std::span<const TimedPoint> history) {
    if (history.empty()) throw InvalidInput("predict_location: empty history");
    const WorldPoint& last = history.back().p;
    if (history.size() == 1) return last;
    const WorldPoint& prev = history[history.size() - 2].p;
    return WorldPoint{2.0 * last.x - prev.x, 2.0 * last.y - prev.y, 2.0 * last.z - prev.z};
}

WorldPoint combine_location(std::span<const WeightedLocation> observations) {
    if (observations.empty()) throw InvalidInput("combine_location: no observations");
    double total = 0.0;
    WorldPoint acc;
    for (const auto& o : observations) {
        if (!(o.confidence >= 0.0)) throw InvalidInput("combine_location: negative confidence");
        total += o.confidence;
        acc.x += o.confidence * o.location.x;
        acc.y += o.confidence * o.location.y;
        acc.z += o.confidence * o.location.z;
    }
    if (!(total > 0.0)) throw InvalidInput("combine_location: zero total confidence");
    return WorldPoint{acc.x / total, acc.y / total, acc.z / total};
}

const MapObject* GlobalMap::find(ObjectId id) const {
    auto it = objects_.find(id);
    return it == objects_.end() ? nullptr : &it->second;
}

double match_distance(const FeatureVector& feature, const WorldPoint& location,
                      const MapObject& object, double geo_weight) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : object.features) {
        if (f.size() != feature.size()) throw InvalidInput("match: feature dimension mismatch");
        best = std::min(best, squared_l2(feature, f));
    }
    const WorldPoint predicted = object.history.empty() ? object.location : predict_location(object.history);
    return best + geo_weight * ground_distance_sq(location, predicted);
}

std::optional<MatchResult> match_object(const FeatureVector& feature, const WorldPoint& location,
                                        const GlobalMap& map, const MatchParams& params) {
    if (feature.empty()) throw InvalidInput("match: empty feature vector");
    std::optional<MatchResult> best;
    for (const auto& [id, obj] : map.objects()) {
        if (obj.features.empty()) continue;
        const WorldPoint predicted = obj.history.empty() ? obj.location : predict_location(obj.history);
        if (!(ground_distance(location, predicted) < params.gate_m)) continue;
        const double d = match_distance(feature, location, obj, params.geo_weight);
        if (!best || d < best->distance) best = MatchResult{id, d};
    }
    if (best && best->distance <= params.threshold) return best;
    return std::nullopt;
}

ObjectId apply_observation(GlobalMap& map, const Observation& obs) {
    ObjectId id;
    if (obs.object_id) {
        id = *obs.object_id;
        while (map.next_id() <= id) map.allocate_id();
    } else {
        id = map.allocate_id();
    }
    auto [it, created] = map.objects().try_emplace(id);
    MapObject& o = it->second;
    const MapParams& params = map.params();
    if (created) {
        o.id = id;
        o.class_id = obs.class_id;
    }
    if (obs.owner_vehicle) o.owner_vehicle = obs.owner_vehicle;

    if (!obs.feature.empty()) {
        o.features.push_back(obs.feature);
        if (o.features.size() > params.feature_cap) {
            o.features.erase(o.features.begin(),
                             o.features.begin() + static_cast<std::ptrdiff_t>(o.features.size() - params.feature_cap));
        }
    }

    if (created || obs.timestamp > o.round_time) {
        // New fusion round.
        o.round_time = obs.timestamp;
        o.round_obs.assign(1, WeightedLocation{obs.confidence, obs.location});
        o.location = obs.location;
        o.confidence = obs.confidence;
        o.history.push_back(TimedPoint{obs.timestamp, o.location});
        if (o.history.size() > params.history_cap) o.history.erase(o.history.begin());
    } else if (obs.timestamp == o.round_time) {
        o.round_obs.push_back(WeightedLocation{obs.confidence, obs.location});
        o.location = combine_location(o.round_obs);
        o.confidence = std::max(o.confidence, obs.confidence);
        o.history.back().p = o.location;
    }
    // Older observations contribute features only; history stays monotone.
    o.last_update = std::max(o.last_update, obs.timestamp);
    return id;
}

MapDelta upsert_observation(GlobalMap& map, const Observation& obs) {
    const ObjectId id = apply_observation(map, obs);
    MapDelta delta;
    delta.time = obs.timestamp;
    delta.upserted.push_back(std::make_shared<const MapObject>(*map.find(id)));
    return delta;
}

std::vector<ObjectId> expire_objects(GlobalMap& map, double now) {
    std::vector<ObjectId> removed;
    auto& objs = map.objects();
    for (auto it = objs.begin(); it != objs.end();) {
        if (now - it->second.last_update > map.params().ttl_s) {
            removed.push_back(it->first);
            it = objs.erase(it);
        } else {
            ++it;
        }
    }
    return removed;
}

} // namespace livemap::map
