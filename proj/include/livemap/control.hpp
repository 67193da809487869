#pragma once

// Controllers mapping the simulator's view of one vehicle to a (scheduled,
// partition) decision: central and distributed coverage-aware schedulers with a
// learned partition policy, plus fixed, random and regression baselines.

#include "livemap/coverage.hpp"
#include "livemap/mapflow.hpp"
#include "livemap/rl.hpp"

#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace livemap::control {

struct Decision {
    int vehicle = 0;
    bool scheduled = true;
    int partition = 0;          // -1 when not scheduled
    std::vector<double> state;  // encoded state when the policy chose the action
};

struct DecisionContext {
    int vehicle = 0;
    double now = 0.0;
    WorldPoint position;
    double radius_m = 50.0;
    rl::VehicleStatus status;
    rl::SystemStatus system;
    int previous_partition = -1;
    double previous_latency_s = 0.0;
    const flow::LocalMap* local_map = nullptr;
    bool explore = false;
    std::mt19937_64* rng = nullptr;
};

/// Fixed partitions and the random baseline.
inline int eo() { return 0; }
inline int lp(int max_partition) { return max_partition; }
int ro(int max_partition, std::mt19937_64& rng);

/// Degree-2 latency model over (CAV count n, channel quality q, partition y).
/// Basis: 1, n, q, e_1..e_N, n^2, nq, q^2, n e_k, q e_k, with e_k the partition
/// indicator (partition 0 is the reference level).
struct RegressionModel {
    int max_partition = 4;
    std::vector<double> coefficients;

    static std::size_t feature_count(int max_partition);
    static std::vector<double> features(double n, double q, int y, int max_partition);
    double predict(double n, double q, int y) const;
};

struct RegressionSample {
    double cav_count = 0.0;
    double channel_quality = 0.0;
    int partition = 0;
    double latency_s = 0.0;
};

/// Ridge least squares on the mean loss, so duplicating the data set leaves the
/// model unchanged. Needs at least ten samples per coefficient.
RegressionModel rm_fit(std::span<const RegressionSample> samples, int max_partition, double ridge = 1e-6);

/// Partition with the lowest predicted latency, ties to the lowest.
int rm_decide(const RegressionModel& model, double cav_count, double channel_quality);

/// One self-decision of the distributed controller.
struct DistributedSchedule {
    bool scheduled = true;
    std::vector<coverage::CoverageDisk> disks; // ascending vehicle id
    coverage::ScheduleResult result;
};

/// Coverage disks this vehicle believes in: its own plus every other vehicle in
/// its local map at the linearly predicted position with this vehicle's radius,
/// ordered by vehicle id (unowned vehicle objects after, by object id).
std::vector<coverage::CoverageDisk> estimate_disks(int vehicle, const WorldPoint& position, double radius,
                                                   const flow::LocalMap& local);

/// Greedy coverage prune over the estimated disks; reports whether this
/// vehicle keeps itself scheduled. An empty map schedules itself.
DistributedSchedule d_head_schedule(int vehicle, const WorldPoint& position, double radius,
                                    const flow::LocalMap& local, double beta, double cell = 2.0);

class Controller {
public:
    virtual ~Controller() = default;

    virtual std::string name() const = 0;
    /// Called at every metric sample; periodic controllers refresh here.
    virtual void on_time(double /*now*/, std::span<const coverage::CoverageDisk> /*disks*/) {}
    virtual Decision decide(const DecisionContext& ctx) = 0;
    /// Policy input for this context; empty for controllers without a policy.
    virtual std::vector<double> encode(const DecisionContext& /*ctx*/) const { return {}; }
    /// Schedule state for the coverage metric; nullopt defers to the last decision.
    virtual std::optional<bool> scheduled_now(int /*vehicle*/) const { return std::nullopt; }
    /// Policy whose transitions should be learned from, if any.
    virtual rl::QPolicy* policy() { return nullptr; }
    virtual void after_train_step() {}
};

class FixedController : public Controller {
public:
    FixedController(std::string name, int partition) : name_(std::move(name)), partition_(partition) {}
    std::string name() const override { return name_; }
    Decision decide(const DecisionContext& ctx) override;

private:
    std::string name_;
    int partition_;
};

class RandomController : public Controller {
public:
    RandomController(int max_partition, std::uint64_t seed) : max_partition_(max_partition), rng_(seed) {}
    std::string name() const override { return "ro"; }
    Decision decide(const DecisionContext& ctx) override;

private:
    int max_partition_;
    std::mt19937_64 rng_;
};

class RegressionController : public Controller {
public:
    explicit RegressionController(RegressionModel model) : model_(std::move(model)) {}
    std::string name() const override { return "rm"; }
    Decision decide(const DecisionContext& ctx) override;
    const RegressionModel& model() const { return model_; }

private:
    RegressionModel model_;
};

/// Central scheduler refreshed every `period_s` over the true disks; scheduled
/// vehicles take the policy's action on the central state. With
/// `schedule_all`, every vehicle is scheduled (policy-only variant).
class HeadController : public Controller {
public:
    HeadController(rl::QPolicy& policy, double beta, double period_s, double cell, bool schedule_all = false,
                   rl::StateScales scales = {});
    std::string name() const override { return schedule_all_ ? "livemap-lite" : "livemap"; }
    void on_time(double now, std::span<const coverage::CoverageDisk> disks) override;
    Decision decide(const DecisionContext& ctx) override;
    std::vector<double> encode(const DecisionContext& ctx) const override;
    std::optional<bool> scheduled_now(int vehicle) const override;
    rl::QPolicy* policy() override { return &policy_; }

    /// Scheduled flags of the last refresh, indexed by vehicle id.
    const std::vector<bool>& cached_schedule() const { return cached_; }
    std::int64_t refreshes() const { return refreshes_; }

private:
    rl::QPolicy& policy_;
    double beta_;
    double period_s_;
    double cell_;
    bool schedule_all_;
    rl::StateScales scales_;
    double next_refresh_ = 0.0;
    std::vector<bool> cached_;
    std::int64_t refreshes_ = 0;
};

/// Asynchronous per-vehicle scheduler over each vehicle's local map. Agents act
/// on shared snapshots of the central policy; `sync_period` 0 reads the central
/// network directly (instant, lossless sharing).
class DHeadController : public Controller {
public:
    DHeadController(rl::QPolicy& policy, int vehicles, int max_partition, double beta, double cell,
                    std::int64_t sync_period = 0, rl::StateScales scales = {});
    std::string name() const override { return "livemap-dist"; }
    Decision decide(const DecisionContext& ctx) override;
    std::vector<double> encode(const DecisionContext& ctx) const override;
    rl::QPolicy* policy() override { return &policy_; }
    void after_train_step() override;
    void sync();
    const std::vector<rl::PolicyAgent>& agents() const { return agents_; }

private:
    rl::QPolicy& policy_;
    int max_partition_;
    double beta_;
    double cell_;
    std::int64_t sync_period_;
    rl::StateScales scales_;
    std::vector<rl::PolicyAgent> agents_;
};

} // namespace livemap::control
