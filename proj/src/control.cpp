#include "livemap/control.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace livemap::control {

namespace {

// Vehicle objects nobody has claimed yet sort after every real vehicle id.
constexpr std::int64_t kUnownedBase = std::int64_t{1} << 40;

} // namespace

int ro(int max_partition, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> pick(0, max_partition);
    return pick(rng);
}

std::size_t RegressionModel::feature_count(int n) {
    const auto k = static_cast<std::size_t>(n);
    return 1 + 2 + k + 3 + 2 * k;
}

std::vector<double> RegressionModel::features(double n, double q, int y, int max_partition) {
    std::vector<double> f;
    f.reserve(feature_count(max_partition));
    f.push_back(1.0);
    f.push_back(n);
    f.push_back(q);
    for (int k = 1; k <= max_partition; ++k) f.push_back(y == k ? 1.0 : 0.0);
    f.push_back(n * n);
    f.push_back(n * q);
    f.push_back(q * q);
    for (int k = 1; k <= max_partition; ++k) f.push_back(y == k ? n : 0.0);
    for (int k = 1; k <= max_partition; ++k) f.push_back(y == k ? q : 0.0);
    return f;
}

double RegressionModel::predict(double n, double q, int y) const {
    const std::vector<double> f = features(n, q, y, max_partition);
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * coefficients[i];
    return s;
}

RegressionModel rm_fit(std::span<const RegressionSample> samples, int max_partition, double ridge) {
    if (max_partition < 1) throw InvalidInput("rm_fit: need at least two partitions");
    const std::size_t p = RegressionModel::feature_count(max_partition);
    if (samples.size() < 10 * p) {
        throw FitError("rm_fit: " + std::to_string(samples.size()) + " samples for " + std::to_string(p) +
                       " coefficients; need at least ten per coefficient");
    }
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    for (const auto& s : samples) {
        if (s.partition < 0 || s.partition > max_partition) throw InvalidInput("rm_fit: partition out of range");
        const std::vector<double> f = RegressionModel::features(s.cav_count, s.channel_quality, s.partition, max_partition);
        const Eigen::Map<const Eigen::VectorXd> x(f.data(), static_cast<Eigen::Index>(p));
        gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
        rhs += x * s.latency_s;
    }
    const double inv_n = 1.0 / static_cast<double>(samples.size());
    gram = gram.selfadjointView<Eigen::Lower>();
    gram *= inv_n;
    rhs *= inv_n;
    gram.diagonal().array() += ridge;

    // Column scaling keeps the quadratic terms from swamping the solve.
    const Eigen::VectorXd scale = gram.diagonal().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd scaled = scale.asDiagonal() * gram * scale.asDiagonal();
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(scaled);
    if (ldlt.info() != Eigen::Success) throw FitError("rm_fit: normal equations could not be factored");
    const Eigen::VectorXd c = scale.asDiagonal() * ldlt.solve(scale.asDiagonal() * rhs);
    if (!c.allFinite()) throw FitError("rm_fit: design is rank deficient beyond what the ridge term can fix");

    RegressionModel m;
    m.max_partition = max_partition;
    m.coefficients.assign(c.data(), c.data() + c.size());
    return m;
}

int rm_decide(const RegressionModel& model, double cav_count, double channel_quality) {
    int best = 0;
    double best_latency = model.predict(cav_count, channel_quality, 0);
    for (int y = 1; y <= model.max_partition; ++y) {
        const double l = model.predict(cav_count, channel_quality, y);
        if (l < best_latency) {
            best = y;
            best_latency = l;
        }
    }
    return best;
}

std::vector<coverage::CoverageDisk> estimate_disks(int vehicle, const WorldPoint& position, double radius,
                                                   const flow::LocalMap& local) {
    std::vector<coverage::CoverageDisk> disks;
    disks.push_back({vehicle, position, radius});
    for (const auto& [id, obj] : local.objects) {
        if (obj->class_id != map::kVehicle || obj->history.empty()) continue;
        if (obj->owner_vehicle == vehicle) continue;
        const std::int64_t key = obj->owner_vehicle ? *obj->owner_vehicle : kUnownedBase + id;
        disks.push_back({key, map::predict_location(obj->history), radius});
    }
    std::sort(disks.begin(), disks.end(),
              [](const coverage::CoverageDisk& a, const coverage::CoverageDisk& b) { return a.vehicle_id < b.vehicle_id; });
    return disks;
}

DistributedSchedule d_head_schedule(int vehicle, const WorldPoint& position, double radius,
                                    const flow::LocalMap& local, double beta, double cell) {
    DistributedSchedule out;
    out.disks = estimate_disks(vehicle, position, radius, local);
    if (out.disks.size() == 1) {
        out.scheduled = true;
        out.result.scheduled.assign(1, true);
        return out;
    }
    out.result = coverage::schedule(out.disks, beta, cell);
    for (std::size_t i = 0; i < out.disks.size(); ++i) {
        if (out.disks[i].vehicle_id == vehicle) out.scheduled = out.result.scheduled[i];
    }
    return out;
}

Decision FixedController::decide(const DecisionContext& ctx) {
    return {ctx.vehicle, true, partition_, {}};
}

Decision RandomController::decide(const DecisionContext& ctx) {
    return {ctx.vehicle, true, ro(max_partition_, rng_), {}};
}

Decision RegressionController::decide(const DecisionContext& ctx) {
    return {ctx.vehicle, true, rm_decide(model_, ctx.system.connected_vehicles, ctx.status.spectral_efficiency), {}};
}

HeadController::HeadController(rl::QPolicy& policy, double beta, double period_s, double cell, bool schedule_all,
                               rl::StateScales scales)
    : policy_(policy), beta_(beta), period_s_(period_s), cell_(cell), schedule_all_(schedule_all), scales_(scales) {}

void HeadController::on_time(double now, std::span<const coverage::CoverageDisk> disks) {
    if (schedule_all_) return;
    if (!cached_.empty() && now + 1e-9 < next_refresh_) return;
    const coverage::ScheduleResult r = coverage::schedule(disks, beta_, cell_);
    cached_.assign(disks.size(), true);
    for (std::size_t i = 0; i < disks.size(); ++i) cached_[static_cast<std::size_t>(disks[i].vehicle_id)] = r.scheduled[i];
    ++refreshes_;
    next_refresh_ = now + period_s_;
}

std::optional<bool> HeadController::scheduled_now(int vehicle) const {
    if (schedule_all_ || cached_.empty()) return true;
    return static_cast<bool>(cached_[static_cast<std::size_t>(vehicle)]);
}

std::vector<double> HeadController::encode(const DecisionContext& ctx) const {
    return rl::encode_state_central(ctx.status, ctx.system, scales_);
}

Decision HeadController::decide(const DecisionContext& ctx) {
    Decision d{ctx.vehicle, *scheduled_now(ctx.vehicle), -1, {}};
    if (!d.scheduled) return d;
    d.state = encode(ctx);
    std::mt19937_64 unused;
    d.partition = policy_.act(d.state, ctx.explore, ctx.rng ? *ctx.rng : unused);
    return d;
}

DHeadController::DHeadController(rl::QPolicy& policy, int vehicles, int max_partition, double beta, double cell,
                                 std::int64_t sync_period, rl::StateScales scales)
    : policy_(policy),
      max_partition_(max_partition),
      beta_(beta),
      cell_(cell),
      sync_period_(sync_period),
      scales_(scales),
      agents_(static_cast<std::size_t>(vehicles)) {
    sync();
}

void DHeadController::sync() { rl::sync_shared_policy(policy_, agents_); }

void DHeadController::after_train_step() {
    if (sync_period_ > 0 && policy_.steps() % sync_period_ == 0) sync();
}

std::vector<double> DHeadController::encode(const DecisionContext& ctx) const {
    return rl::encode_state_dist(ctx.status, ctx.previous_partition, ctx.previous_latency_s, max_partition_, scales_);
}

Decision DHeadController::decide(const DecisionContext& ctx) {
    Decision d{ctx.vehicle, true, -1, {}};
    if (ctx.local_map) {
        d.scheduled = d_head_schedule(ctx.vehicle, ctx.position, ctx.radius_m, *ctx.local_map, beta_, cell_).scheduled;
    }
    if (!d.scheduled) return d;
    d.state = encode(ctx);
    if (ctx.explore && ctx.rng) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        if (unit(*ctx.rng) < policy_.epsilon()) {
            d.partition = ro(max_partition_, *ctx.rng);
            return d;
        }
    }
    if (sync_period_ == 0) {
        const std::vector<double> q = policy_.q_values(d.state);
        d.partition = rl::argmax(q);
    } else {
        d.partition = agents_[static_cast<std::size_t>(ctx.vehicle)].act_greedy(d.state);
    }
    return d;
}

} // namespace livemap::control
