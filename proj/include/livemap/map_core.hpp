#pragma once

// Data-plane math: pixel/camera/world projection, robust depth, location-aware
// feature matching, confidence-weighted combination, linear prediction and the
// edge-resident global map.

#include "livemap/common.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace livemap::map {

using ObjectId = std::int64_t;
using FeatureVector = std::vector<double>;

enum ObjectClass : int {
    kVehicle = 0,
    kPedestrian = 1,
};

struct PixelBox {
    double u0 = 0.0; // column of the box center
    double v0 = 0.0; // row of the box center
    double width = 0.0;
    double height = 0.0;
    double confidence = 0.0;
    int class_id = 0;
};

struct CameraIntrinsics {
    double focal_px = 1.0;
    int width_px = 1;  // R_W
    int height_px = 1; // R_H
};

struct CameraPoint {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// Camera-to-world homogeneous transform, row-major.
struct Pose {
    std::array<double, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

    double at(int r, int c) const { return m[static_cast<std::size_t>(r * 4 + c)]; }
    double& at(int r, int c) { return m[static_cast<std::size_t>(r * 4 + c)]; }

    static Pose identity() { return Pose{}; }
    /// Rotation by `yaw` radians about world +z (right-handed) followed by translation.
    static Pose from_yaw(double yaw, const WorldPoint& translation);
};

/// Throws InvalidInput unless the bottom row is (0,0,0,1) and the rotation block
/// is orthonormal within 1e-6.
void validate_pose(const Pose& pose);

/// Rigid-transform inverse.
Pose invert(const Pose& pose);

CameraPoint pixel_to_camera(const PixelBox& box, double depth, const CameraIntrinsics& intr);

/// Algebraic inverse of pixel_to_camera: returns (u0, v0, depth).
std::array<double, 3> camera_to_pixel(const CameraPoint& p, const CameraIntrinsics& intr);

WorldPoint camera_to_world(const CameraPoint& p, const Pose& pose);

struct DepthImage {
    int width = 0;
    int height = 0;
    std::vector<double> meters; // row-major, 0 marks an invalid pixel

    double at(int row, int col) const {
        return meters[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(col)];
    }
};

struct DepthSampling {
    int patches = 8;
    int patch_size = 4;
};

/// Drops the single largest and single smallest patch mean and averages the rest.
/// Throws NoDepthError with fewer than three means.
double trimmed_patch_mean(std::span<const double> patch_means);

/// Robust object depth from randomly placed square patches inside the middle
/// half of the box. Patches with no valid pixel are skipped.
double estimate_depth(const DepthImage& image, const PixelBox& box, std::uint64_t seed,
                      const DepthSampling& sampling = {});

struct TimedPoint {
    double t = 0.0;
    WorldPoint p;
};

/// Linear extrapolation from the two newest entries: 2 g(t) - g(t-1).
WorldPoint predict_location(std::span<const TimedPoint> history);

struct WeightedLocation {
    double confidence = 0.0;
    WorldPoint location;
};

/// Confidence-weighted mean location.
WorldPoint combine_location(std::span<const WeightedLocation> observations);

struct MapObject {
    ObjectId id = 0;
    int class_id = 0;
    WorldPoint location;
    std::vector<FeatureVector> features; // multi-view set, oldest first
    double confidence = 0.0;
    std::vector<TimedPoint> history; // strictly increasing in t
    double last_update = 0.0;
    /// Vehicle that reported itself as this object, when known.
    std::optional<int> owner_vehicle;

    // Observations fused into the newest history entry.
    double round_time = -1.0;
    std::vector<WeightedLocation> round_obs;
};

struct MapParams {
    double ttl_s = 3.0;
    std::size_t feature_cap = 8;
    std::size_t history_cap = 16;
};

class GlobalMap {
public:
    explicit GlobalMap(MapParams params = {}) : params_(params) {}

    const MapParams& params() const { return params_; }
    const std::map<ObjectId, MapObject>& objects() const { return objects_; }
    std::map<ObjectId, MapObject>& objects() { return objects_; }
    ObjectId next_id() const { return next_id_; }
    ObjectId allocate_id() { return next_id_++; }
    const MapObject* find(ObjectId id) const;
    std::size_t size() const { return objects_.size(); }

private:
    MapParams params_;
    std::map<ObjectId, MapObject> objects_;
    ObjectId next_id_ = 1;
};

struct MatchParams {
    double geo_weight = 0.1;   // w
    double gate_m = 100.0;     // candidate radius
    double threshold = 25.0;   // tau, squared latent units
};

struct MatchResult {
    ObjectId id = 0;
    double distance = 0.0;
};

/// Location-aware distance: min over the object's feature set of squared L2
/// feature distance plus w times squared ground distance to the predicted
/// location.
double match_distance(const FeatureVector& feature, const WorldPoint& location,
                      const MapObject& object, double geo_weight);

/// Best gated candidate with distance <= threshold, or nullopt for a new object.
std::optional<MatchResult> match_object(const FeatureVector& feature, const WorldPoint& location,
                                        const GlobalMap& map, const MatchParams& params = {});

/// A detection already resolved against the map.
struct Observation {
    std::optional<ObjectId> object_id; // nullopt creates a new object
    int class_id = 0;
    WorldPoint location;
    double confidence = 1.0;
    FeatureVector feature;
    double timestamp = 0.0;
    std::optional<int> owner_vehicle;
};

using ObjectSnapshot = std::shared_ptr<const MapObject>;

struct MapDelta {
    std::uint64_t seq = 0;
    double time = 0.0;
    std::vector<ObjectSnapshot> upserted; // ascending id
    std::vector<ObjectId> removed;        // ascending id

    bool empty() const { return upserted.empty() && removed.empty(); }
};

/// Applies one observation and returns the id it landed on. Does not build a delta.
ObjectId apply_observation(GlobalMap& map, const Observation& obs);

/// apply_observation plus a delta containing the single touched object.
MapDelta upsert_observation(GlobalMap& map, const Observation& obs);

/// Removes objects with now - last_update > ttl; returns removed ids ascending.
std::vector<ObjectId> expire_objects(GlobalMap& map, double now);

} // namespace livemap::map
