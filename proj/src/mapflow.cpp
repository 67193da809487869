#include "livemap/mapflow.hpp"

#include <algorithm>
#include <set>

namespace livemap::flow {

void IdentityTracker::label(map::ObjectId object, std::int64_t truth_id) {
    if (truth_.emplace(object, truth_id).second) ++live_per_truth_[truth_id];
}

void IdentityTracker::forget(map::ObjectId object) {
    auto it = truth_.find(object);
    if (it == truth_.end()) return;
    if (--live_per_truth_[it->second] == 0) live_per_truth_.erase(it->second);
    truth_.erase(it);
}

std::optional<std::int64_t> IdentityTracker::truth_of(map::ObjectId object) const {
    auto it = truth_.find(object);
    if (it == truth_.end()) return std::nullopt;
    return it->second;
}

void IdentityTracker::record(std::int64_t truth_id, map::ObjectId resolved, bool created) {
    ++detections_;
    if (created) {
        // A fresh object is right only if no live object already stands for this identity.
        if (live_per_truth_.find(truth_id) == live_per_truth_.end()) ++consistent_;
        label(resolved, truth_id);
    } else if (truth_of(resolved) == truth_id) {
        ++consistent_;
    }
}

map::MapDelta ingest_completion(map::GlobalMap& global, std::span<const scenario::Detection> detections,
                                const std::optional<SelfReport>& self, double capture_time, double now,
                                const map::MatchParams& match, IdentityTracker* tracker) {
    std::set<map::ObjectId> touched;

    if (self) {
        map::Observation obs;
        obs.class_id = map::kVehicle;
        obs.location = self->location;
        obs.confidence = 1.0;
        obs.feature = self->feature;
        obs.timestamp = capture_time;
        obs.owner_vehicle = self->vehicle;
        for (const auto& [id, o] : global.objects()) {
            if (o.owner_vehicle == self->vehicle) {
                obs.object_id = id;
                break;
            }
        }
        if (!obs.object_id) {
            if (auto m = map::match_object(self->feature, self->location, global, match)) obs.object_id = m->id;
        }
        const bool created = !obs.object_id;
        const map::ObjectId id = map::apply_observation(global, obs);
        if (tracker && created) tracker->label(id, self->vehicle);
        touched.insert(id);
    }

    for (const auto& d : detections) {
        map::Observation obs;
        obs.class_id = d.class_id;
        obs.location = d.location;
        obs.confidence = d.confidence;
        obs.feature = d.feature;
        obs.timestamp = capture_time;
        if (auto m = map::match_object(d.feature, d.location, global, match)) obs.object_id = m->id;
        const bool created = !obs.object_id;
        const map::ObjectId id = map::apply_observation(global, obs);
        if (tracker) tracker->record(d.truth_id, id, created);
        touched.insert(id);
    }

    map::MapDelta delta;
    delta.time = now;
    delta.removed = map::expire_objects(global, now);
    for (map::ObjectId id : delta.removed) {
        touched.erase(id);
        if (tracker) tracker->forget(id);
    }
    for (map::ObjectId id : touched) delta.upserted.push_back(std::make_shared<const map::MapObject>(*global.find(id)));
    return delta;
}

DeltaStatus apply_delta(LocalMap& local, const map::MapDelta& delta) {
    if (delta.seq != local.last_seq + 1) return DeltaStatus::Gap;
    for (map::ObjectId id : delta.removed) local.objects.erase(id);
    for (const auto& snap : delta.upserted) local.objects[snap->id] = snap;
    local.last_seq = delta.seq;
    return DeltaStatus::Applied;
}

void resync(LocalMap& local, const map::GlobalMap& global, std::uint64_t seq) {
    local.objects.clear();
    for (const auto& [id, o] : global.objects()) local.objects.emplace(id, std::make_shared<const map::MapObject>(o));
    local.last_seq = seq;
}

namespace {

bool same_object(const map::MapObject& a, const map::MapObject& b) {
    if (a.id != b.id || a.class_id != b.class_id || !(a.location == b.location) || a.features != b.features ||
        a.confidence != b.confidence || a.last_update != b.last_update || a.owner_vehicle != b.owner_vehicle ||
        a.history.size() != b.history.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        if (a.history[i].t != b.history[i].t || !(a.history[i].p == b.history[i].p)) return false;
    }
    return true;
}

} // namespace

bool mirrors(const LocalMap& local, const map::GlobalMap& global) {
    if (local.objects.size() != global.size()) return false;
    auto it = local.objects.begin();
    for (const auto& [id, o] : global.objects()) {
        if (it->first != id || !same_object(*it->second, o)) return false;
        ++it;
    }
    return true;
}

MapService::MapService(int vehicles, map::MapParams params, map::MatchParams match)
    : global_(params), match_(match), locals_(static_cast<std::size_t>(vehicles)) {}

void MapService::broadcast(map::MapDelta& delta) {
    delta.seq = ++seq_;
    for (int v = 0; v < static_cast<int>(locals_.size()); ++v) deliver(v, delta);
}

void MapService::deliver(int vehicle, const map::MapDelta& delta) {
    LocalMap& local = locals_.at(static_cast<std::size_t>(vehicle));
    if (apply_delta(local, delta) == DeltaStatus::Gap) {
        resync(local, global_, seq_);
        ++resyncs_;
    }
}

const map::MapDelta& MapService::ingest(std::span<const scenario::Detection> detections,
                                        const std::optional<SelfReport>& self, double capture_time, double now) {
    last_ = ingest_completion(global_, detections, self, capture_time, now, match_, &tracker_);
    broadcast(last_);
    return last_;
}

std::optional<map::MapDelta> MapService::maintain(double now) {
    map::MapDelta delta;
    delta.time = now;
    delta.removed = map::expire_objects(global_, now);
    if (delta.removed.empty()) return std::nullopt;
    for (map::ObjectId id : delta.removed) tracker_.forget(id);
    broadcast(delta);
    return delta;
}

} // namespace livemap::flow
