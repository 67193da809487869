#include "livemap/rl.hpp"

#include "livemap/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace livemap::rl {

namespace {

constexpr char kPolicyMagic[8] = {'L', 'M', 'Q', 'P', 'O', 'L', '0', '1'};

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

} // namespace

std::vector<double> encode_state_central(const VehicleStatus& v, const SystemStatus& s, const StateScales& k) {
    return {
        clamp01(v.spectral_efficiency / (2.0 * k.spectral_efficiency_ref)),
        clamp01(v.cpu_multiplier / (2.0 * k.hardware_ref)),
        clamp01(v.gpu_multiplier / (2.0 * k.hardware_ref)),
        clamp01(s.server_multiplier / (2.0 * k.server_ref)),
        clamp01(s.connected_vehicles / (2.0 * k.vehicles_ref)),
        clamp01(s.queued_vehicles / (2.0 * k.vehicles_ref)),
        s.bandwidth_hz / k.bandwidth_ref,
    };
}

std::vector<std::string> central_state_schema() {
    return {"channel_quality", "cpu_multiplier", "gpu_multiplier", "server_multiplier",
            "connected_vehicles", "queued_vehicles", "bandwidth"};
}

std::vector<double> encode_state_dist(const VehicleStatus& v, int previous_partition, double previous_latency_s,
                                      int max_partition, const StateScales& k) {
    if (previous_partition < -1 || previous_partition > max_partition) {
        throw InvalidInput("encode_state_dist: previous partition out of range");
    }
    std::vector<double> s{
        clamp01(v.spectral_efficiency / (2.0 * k.spectral_efficiency_ref)),
        clamp01(v.cpu_multiplier / (2.0 * k.hardware_ref)),
        clamp01(v.gpu_multiplier / (2.0 * k.hardware_ref)),
    };
    const std::size_t slots = static_cast<std::size_t>(max_partition) + 2;
    const std::size_t base = s.size();
    s.resize(base + slots, 0.0);
    s[base + static_cast<std::size_t>(previous_partition + 1)] = 1.0;
    s.push_back(std::min(std::max(previous_latency_s, 0.0), k.latency_cap_s) / k.latency_cap_s);
    return s;
}

std::vector<std::string> dist_state_schema(int max_partition) {
    std::vector<std::string> names{"channel_quality", "cpu_multiplier", "gpu_multiplier", "prev_unscheduled"};
    for (int y = 0; y <= max_partition; ++y) names.push_back("prev_partition_" + std::to_string(y));
    names.emplace_back("prev_latency");
    return names;
}

int argmax(std::span<const double> values) {
    int best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    return best;
}

QPolicy::QPolicy(int state_size, int action_count, PolicyParams params, std::uint64_t seed)
    : params_(std::move(params)), replay_(params_.replay), sample_rng_(splitmix64(seed ^ 0x5A3F1ull)) {
    std::vector<int> sizes{state_size};
    sizes.insert(sizes.end(), params_.hidden.begin(), params_.hidden.end());
    sizes.push_back(action_count);
    online_ = nn::DenseNet(sizes, seed, params_.leak);
    target_ = online_;
    optimizer_ = nn::make_adam(online_, params_.learning_rate);
}

std::vector<double> QPolicy::q_values(std::span<const double> state) const {
    const nn::Vector q = online_.forward(state);
    return {q.data(), q.data() + q.size()};
}

int QPolicy::act(std::span<const double> state, bool explore, std::mt19937_64& rng) const {
    if (static_cast<int>(state.size()) != state_size()) throw InvalidInput("act: state size mismatch");
    if (explore) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        if (unit(rng) < epsilon()) {
            std::uniform_int_distribution<int> pick(0, action_count() - 1);
            return pick(rng);
        }
    }
    const std::vector<double> q = q_values(state);
    return argmax(q);
}

double QPolicy::epsilon() const {
    const double e = params_.epsilon_start * std::pow(params_.epsilon_decay, static_cast<double>(steps_));
    return std::clamp(e, params_.epsilon_end, params_.epsilon_start);
}

double QPolicy::beta() const {
    if (params_.beta_anneal_steps <= 0) return 1.0;
    const double frac = static_cast<double>(steps_) / static_cast<double>(params_.beta_anneal_steps);
    return std::min(1.0, params_.beta_start + (1.0 - params_.beta_start) * frac);
}

std::optional<double> QPolicy::train_step() {
    auto drawn = replay_.sample(params_.batch_size, sample_rng_, beta());
    if (!drawn) return std::nullopt;
    const auto n = static_cast<Eigen::Index>(params_.batch_size);
    const int in = state_size();

    nn::Batch batch;
    batch.inputs.resize(in, n);
    nn::Matrix next(in, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Transition& t = *drawn->items[static_cast<std::size_t>(i)];
        if (static_cast<int>(t.state.size()) != in || static_cast<int>(t.next_state.size()) != in) {
            throw InvalidInput("train_step: transition state size mismatch");
        }
        for (int r = 0; r < in; ++r) {
            batch.inputs(r, i) = t.state[static_cast<std::size_t>(r)];
            next(r, i) = t.next_state[static_cast<std::size_t>(r)];
        }
    }
    const nn::Matrix next_q = target_.forward(next);
    batch.targets.resize(static_cast<std::size_t>(n));
    batch.actions.resize(static_cast<std::size_t>(n));
    batch.weights = drawn->weights;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const Transition& t = *drawn->items[ui];
        batch.actions[ui] = t.action;
        batch.targets[ui] = t.done ? t.reward : t.reward + params_.gamma * next_q.col(i).maxCoeff();
    }

    nn::BackwardResult br = nn::backward(online_, batch);
    nn::adam_step(online_, br.grads, optimizer_);
    for (std::size_t i = 0; i < drawn->indices.size(); ++i) {
        replay_.update_priority(drawn->indices[i], std::abs(br.td_errors[i]) + params_.replay.priority_floor);
    }
    ++steps_;
    if (params_.target_sync > 0 && steps_ % params_.target_sync == 0) target_ = online_;
    return br.loss;
}

void QPolicy::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open checkpoint " + path + " for writing");
    out.write(kPolicyMagic, sizeof(kPolicyMagic));
    nn::write_u64(out, static_cast<std::uint64_t>(steps_));
    nn::write_u64(out, static_cast<std::uint64_t>(state_size()));
    nn::write_u64(out, static_cast<std::uint64_t>(action_count()));
    nn::save(out, online_);
    nn::save(out, target_);
    if (!out) throw IoError("failed writing checkpoint " + path);
}

void QPolicy::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path);
    char magic[8];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kPolicyMagic, sizeof(kPolicyMagic)) != 0) {
        throw IoError(path + " is not a policy checkpoint");
    }
    const auto steps = static_cast<std::int64_t>(nn::read_u64(in));
    const auto states = static_cast<int>(nn::read_u64(in));
    const auto actions = static_cast<int>(nn::read_u64(in));
    if (states != state_size() || actions != action_count()) {
        throw IoError(path + ": checkpoint shape does not match the policy");
    }
    nn::DenseNet online = nn::load(in);
    nn::DenseNet target = nn::load(in);
    if (online.layer_sizes() != online_.layer_sizes()) throw IoError(path + ": layer sizes differ");
    online_ = std::move(online);
    target_ = std::move(target);
    optimizer_ = nn::make_adam(online_, params_.learning_rate);
    steps_ = steps;
}

int PolicyAgent::act_greedy(std::span<const double> state) const {
    const nn::Vector q = snapshot->forward(state);
    return argmax(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())));
}

void sync_shared_policy(const QPolicy& central, std::span<PolicyAgent> agents) {
    auto snap = std::make_shared<const nn::DenseNet>(central.online());
    for (auto& a : agents) a.snapshot = snap;
}

} // namespace livemap::rl
