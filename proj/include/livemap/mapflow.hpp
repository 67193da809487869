#pragma once

// Routes completed offloads into the global map (match, fuse, expire) and keeps
// every vehicle's local mirror in step through sequenced deltas.

#include "livemap/map_core.hpp"
#include "livemap/scenario.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace livemap::flow {

/// Counts detections that landed on the object carrying their ground-truth identity.
class IdentityTracker {
public:
    /// Records the outcome of one sensed detection.
    void record(std::int64_t truth_id, map::ObjectId resolved, bool created);
    void label(map::ObjectId object, std::int64_t truth_id);
    void forget(map::ObjectId object);
    std::optional<std::int64_t> truth_of(map::ObjectId object) const;

    std::int64_t detections() const { return detections_; }
    std::int64_t consistent() const { return consistent_; }
    double rate() const { return detections_ ? static_cast<double>(consistent_) / static_cast<double>(detections_) : 1.0; }

private:
    std::unordered_map<map::ObjectId, std::int64_t> truth_;
    std::unordered_map<std::int64_t, int> live_per_truth_;
    std::int64_t detections_ = 0;
    std::int64_t consistent_ = 0;
};

/// A vehicle's own exact report of itself, attached to each offload.
struct SelfReport {
    int vehicle = 0;
    WorldPoint location;
    map::FeatureVector feature;
};

/// Matches each detection against the global map, fuses it, expires stale
/// objects at `now` and returns the consolidated delta (sequence number unset).
map::MapDelta ingest_completion(map::GlobalMap& global, std::span<const scenario::Detection> detections,
                                const std::optional<SelfReport>& self, double capture_time, double now,
                                const map::MatchParams& match, IdentityTracker* tracker = nullptr);

struct LocalMap {
    std::map<map::ObjectId, map::ObjectSnapshot> objects;
    std::uint64_t last_seq = 0;
};

enum class DeltaStatus { Applied, Gap };

/// Applies the delta if it is the next in sequence; otherwise leaves the map
/// untouched and reports the gap.
DeltaStatus apply_delta(LocalMap& local, const map::MapDelta& delta);

/// Replaces the local map with a full snapshot of the global map at `seq`.
void resync(LocalMap& local, const map::GlobalMap& global, std::uint64_t seq);

/// Structural equality of a local mirror and the global map.
bool mirrors(const LocalMap& local, const map::GlobalMap& global);

/// Edge-side map owner: sequences deltas and pushes them to every local map.
class MapService {
public:
    MapService(int vehicles, map::MapParams params = {}, map::MatchParams match = {});

    /// Ingests one offload's payload and broadcasts the resulting delta.
    const map::MapDelta& ingest(std::span<const scenario::Detection> detections, const std::optional<SelfReport>& self,
                                double capture_time, double now);
    /// Expiry-only pass; broadcasts only when something was removed.
    std::optional<map::MapDelta> maintain(double now);

    /// Delivers a delta to one vehicle, falling back to a resync on a gap.
    void deliver(int vehicle, const map::MapDelta& delta);

    const map::GlobalMap& global() const { return global_; }
    const LocalMap& local(int vehicle) const { return locals_[static_cast<std::size_t>(vehicle)]; }
    LocalMap& local(int vehicle) { return locals_[static_cast<std::size_t>(vehicle)]; }
    const IdentityTracker& identity() const { return tracker_; }
    std::uint64_t seq() const { return seq_; }
    std::int64_t resyncs() const { return resyncs_; }
    const map::MapDelta& last_delta() const { return last_; }

private:
    void broadcast(map::MapDelta& delta);

    map::GlobalMap global_;
    map::MatchParams match_;
    std::vector<LocalMap> locals_;
    IdentityTracker tracker_;
    std::uint64_t seq_ = 0;
    std::int64_t resyncs_ = 0;
    map::MapDelta last_;
};

} // namespace livemap::flow
