#include "livemap/map_core.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace livemap;
using namespace livemap::map;

namespace {

FeatureVector feature(std::initializer_list<double> v) { return FeatureVector(v); }

Observation obs(std::optional<ObjectId> id, WorldPoint p, double conf, FeatureVector f, double t) {
    Observation o;
    o.object_id = id;
    o.class_id = kPedestrian;
    o.location = p;
    o.confidence = conf;
    o.feature = std::move(f);
    o.timestamp = t;
    return o;
}

} // namespace

TEST_CASE("image center projects onto the optical axis") {
    const CameraIntrinsics intr{800.0, 640, 480};
    PixelBox box;
    box.u0 = 320.0;
    box.v0 = 240.0;
    const CameraPoint p = pixel_to_camera(box, 12.5, intr);
    CHECK(p.x == 0.0);
    CHECK(p.y == 0.0);
    CHECK(p.z == 12.5);
}

TEST_CASE("pixel and camera coordinates round trip") {
    const CameraIntrinsics intr{700.0, 1280, 720};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1279.0), v(0.0, 719.0), d(1.0, 80.0);
    for (int i = 0; i < 200; ++i) {
        PixelBox box;
        box.u0 = u(rng);
        box.v0 = v(rng);
        const double depth = d(rng);
        const auto back = camera_to_pixel(pixel_to_camera(box, depth, intr), intr);
        CHECK(back[0] == doctest::Approx(box.u0).epsilon(1e-12));
        CHECK(back[1] == doctest::Approx(box.v0).epsilon(1e-12));
        CHECK(back[2] == doctest::Approx(depth));
    }
}

TEST_CASE("pixel_to_camera rejects bad input") {
    const CameraIntrinsics intr{800.0, 640, 480};
    PixelBox box;
    box.u0 = 10;
    box.v0 = 10;
    CHECK_THROWS_AS(pixel_to_camera(box, 0.0, intr), InvalidInput);
    CHECK_THROWS_AS(pixel_to_camera(box, -1.0, intr), InvalidInput);
    box.u0 = 640;
    CHECK_THROWS_AS(pixel_to_camera(box, 5.0, intr), InvalidInput);
}

TEST_CASE("pose inverse composes to identity") {
    const Pose p = Pose::from_yaw(0.7, {3.0, -4.0, 1.5});
    const Pose inv = invert(p);
    const CameraPoint c{1.0, 2.0, 3.0};
    const WorldPoint w = camera_to_world(c, p);
    const WorldPoint back = camera_to_world({w.x, w.y, w.z}, inv);
    CHECK(back.x == doctest::Approx(c.x));
    CHECK(back.y == doctest::Approx(c.y));
    CHECK(back.z == doctest::Approx(c.z));
}

TEST_CASE("malformed poses are rejected") {
    Pose p;
    p.at(3, 0) = 0.5;
    CHECK_THROWS_AS(validate_pose(p), InvalidInput);
    Pose q;
    q.at(0, 0) = 2.0;
    CHECK_THROWS_AS(camera_to_world({}, q), InvalidInput);
}

TEST_CASE("trimmed mean drops one extreme at each end") {
    const std::vector<double> v{1.0, 100.0, 5.0, 6.0, 7.0};
    CHECK(trimmed_patch_mean(v) == doctest::Approx(6.0));
    const std::vector<double> two{1.0, 2.0};
    CHECK_THROWS_AS(trimmed_patch_mean(two), NoDepthError);
}

TEST_CASE("depth estimate on a constant image is exact and seeded") {
    DepthImage img{64, 48, std::vector<double>(64 * 48, 9.25)};
    PixelBox box;
    box.u0 = 32;
    box.v0 = 24;
    box.width = 20;
    box.height = 16;
    CHECK(estimate_depth(img, box, 1) == doctest::Approx(9.25));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> noise(5.0, 15.0);
    for (auto& m : img.meters) m = noise(rng);
    CHECK(estimate_depth(img, box, 42) == estimate_depth(img, box, 42));
}

TEST_CASE("depth estimate fails when the box has no valid pixels") {
    DepthImage img{32, 32, std::vector<double>(32 * 32, 0.0)};
    PixelBox box;
    box.u0 = 16;
    box.v0 = 16;
    box.width = 8;
    box.height = 8;
    CHECK_THROWS_AS(estimate_depth(img, box, 1), NoDepthError);
}

TEST_CASE("linear prediction extrapolates the last step") {
    const std::vector<TimedPoint> h{{0.0, {0, 0, 0}}, {0.1, {1, 2, 0}}, {0.2, {3, 3, 0}}};
    const WorldPoint p = predict_location(h);
    CHECK(p.x == 5.0);
    CHECK(p.y == 4.0);
    const std::vector<TimedPoint> one{{0.0, {7, 8, 0}}};
    CHECK(predict_location(one).x == 7.0);
}

TEST_CASE("confidence-weighted combination") {
    const std::vector<WeightedLocation> obs{{1.0, {0, 0, 0}}, {3.0, {4, 8, 0}}};
    const WorldPoint p = combine_location(obs);
    CHECK(p.x == doctest::Approx(3.0));
    CHECK(p.y == doctest::Approx(6.0));
    const std::vector<WeightedLocation> zero{{0.0, {1, 1, 0}}};
    CHECK_THROWS_AS(combine_location(zero), InvalidInput);
}

TEST_CASE("matching prefers the nearer object and respects the threshold") {
    GlobalMap m;
    const ObjectId a = apply_observation(m, obs(std::nullopt, {0, 0, 0}, 1.0, feature({0, 0}), 0.0));
    const ObjectId b = apply_observation(m, obs(std::nullopt, {10, 0, 0}, 1.0, feature({0, 0}), 0.0));
    REQUIRE(a != b);
    MatchParams params;
    auto r = match_object(feature({0.1, 0}), {9.0, 0, 0}, m, params);
    REQUIRE(r);
    CHECK(r->id == b);

    auto none = match_object(feature({10, 10}), {0, 0, 0}, m, params);
    CHECK_FALSE(none);

    params.gate_m = 0.5;
    CHECK_FALSE(match_object(feature({0, 0}), {5.0, 0, 0}, m, params));
}

TEST_CASE("same-round observations fuse, later rounds extend the history") {
    GlobalMap m;
    const ObjectId id = apply_observation(m, obs(std::nullopt, {0, 0, 0}, 1.0, feature({1}), 0.1));
    apply_observation(m, obs(id, {2, 0, 0}, 1.0, feature({1}), 0.1));
    const MapObject* o = m.find(id);
    REQUIRE(o);
    CHECK(o->location.x == doctest::Approx(1.0));
    CHECK(o->history.size() == 1);
    apply_observation(m, obs(id, {5, 0, 0}, 0.5, feature({1}), 0.2));
    CHECK(m.find(id)->history.size() == 2);
    CHECK(m.find(id)->location.x == 5.0);
    // A stale observation adds its feature but never reorders history.
    apply_observation(m, obs(id, {50, 0, 0}, 1.0, feature({2}), 0.0));
    CHECK(m.find(id)->history.size() == 2);
    CHECK(m.find(id)->features.size() == 4);
}

TEST_CASE("feature and history sets are capped") {
    MapParams params;
    params.feature_cap = 3;
    params.history_cap = 4;
    GlobalMap m(params);
    const ObjectId id = apply_observation(m, obs(std::nullopt, {0, 0, 0}, 1.0, feature({0}), 0.0));
    for (int k = 1; k < 10; ++k) apply_observation(m, obs(id, {double(k), 0, 0}, 1.0, feature({double(k)}), 0.1 * k));
    const MapObject* o = m.find(id);
    CHECK(o->features.size() == 3);
    CHECK(o->features.back()[0] == 9.0);
    CHECK(o->history.size() == 4);
    for (std::size_t i = 1; i < o->history.size(); ++i) CHECK(o->history[i].t > o->history[i - 1].t);
}

TEST_CASE("objects past their ttl expire") {
    MapParams params;
    params.ttl_s = 1.0;
    GlobalMap m(params);
    const ObjectId a = apply_observation(m, obs(std::nullopt, {0, 0, 0}, 1.0, feature({0}), 0.0));
    const ObjectId b = apply_observation(m, obs(std::nullopt, {9, 0, 0}, 1.0, feature({0}), 0.5));
    CHECK(expire_objects(m, 1.0).empty());
    const auto removed = expire_objects(m, 1.2);
    REQUIRE(removed.size() == 1);
    CHECK(removed[0] == a);
    CHECK(m.find(b));
}

TEST_CASE("explicit ids advance the allocator") {
    GlobalMap m;
    apply_observation(m, obs(ObjectId{41}, {0, 0, 0}, 1.0, feature({0}), 0.0));
    CHECK(m.next_id() == 42);
    const MapDelta d = upsert_observation(m, obs(std::nullopt, {1, 1, 0}, 1.0, feature({0}), 0.0));
    REQUIRE(d.upserted.size() == 1);
    CHECK(d.upserted[0]->id == 42);
}
