#pragma once

// DQN agent with prioritized replay, epsilon-greedy exploration and a target
// network, plus the central and distributed state encodings.

#include "livemap/common.hpp"
#include "livemap/neural.hpp"
#include "livemap/replay.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace livemap::rl {

/// What a vehicle knows about itself.
struct VehicleStatus {
    double spectral_efficiency = 0.0; // log2(1 + SNR), bit/s/Hz
    double cpu_multiplier = 1.0;
    double gpu_multiplier = 1.0;
};

/// What the edge knows about the system.
struct SystemStatus {
    double server_multiplier = 1.0;
    int connected_vehicles = 0; // vehicles with an offload in flight
    int queued_vehicles = 0;    // tasks held by edge queues
    double bandwidth_hz = 1e5;
};

/// Reference values map to 0.5 (or 1.0 for bandwidth) in the encoded state.
struct StateScales {
    double spectral_efficiency_ref = 5.0;
    double hardware_ref = 1.0;
    double server_ref = 1.0;
    double vehicles_ref = 50.0;
    double bandwidth_ref = 1e5;
    double latency_cap_s = 2.0;
};

std::vector<double> encode_state_central(const VehicleStatus& v, const SystemStatus& s,
                                         const StateScales& scales = {});
std::vector<std::string> central_state_schema();

/// [vehicle status, one-hot previous decision (slot 0 = unscheduled), clamped previous latency].
std::vector<double> encode_state_dist(const VehicleStatus& v, int previous_partition, double previous_latency_s,
                                      int max_partition, const StateScales& scales = {});
std::vector<std::string> dist_state_schema(int max_partition);

struct PolicyParams {
    std::vector<int> hidden{256, 256};
    double learning_rate = 0.5e-3;
    double gamma = 0.9;
    std::size_t batch_size = 512;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay = 0.9995; // per training step
    std::int64_t target_sync = 500;
    double beta_start = 0.4;
    std::int64_t beta_anneal_steps = 20000;
    double leak = 0.01;
    ReplayParams replay{};
};

/// Index of the largest entry, ties to the lowest index.
int argmax(std::span<const double> values);

class QPolicy {
public:
    QPolicy(int state_size, int action_count, PolicyParams params, std::uint64_t seed);

    int state_size() const { return online_.input_size(); }
    int action_count() const { return online_.output_size(); }
    const PolicyParams& params() const { return params_; }

    /// With probability epsilon (when exploring) a uniform action, else greedy.
    int act(std::span<const double> state, bool explore, std::mt19937_64& rng) const;
    std::vector<double> q_values(std::span<const double> state) const;

    void store(Transition t) { replay_.store(std::move(t)); }
    bool ready() const { return replay_.size() >= params_.batch_size; }

    /// One optimisation step; nullopt when the replay is not ready.
    std::optional<double> train_step();

    double epsilon() const;
    double beta() const;
    std::int64_t steps() const { return steps_; }

    const nn::DenseNet& online() const { return online_; }
    nn::DenseNet& online() { return online_; }
    const nn::DenseNet& target() const { return target_; }
    PrioritizedReplay& replay() { return replay_; }
    const PrioritizedReplay& replay() const { return replay_; }

    /// Checkpoint: "LMQPOL01", u64 step, u64 state size, u64 action count, then the
    /// online and target network snapshots.
    void save(const std::string& path) const;
    void load(const std::string& path);

private:
    PolicyParams params_;
    nn::DenseNet online_;
    nn::DenseNet target_;
    nn::AdamState optimizer_;
    PrioritizedReplay replay_;
    std::mt19937_64 sample_rng_;
    std::int64_t steps_ = 0;
};

/// A vehicle's read-only copy of the shared policy.
struct PolicyAgent {
    std::shared_ptr<const nn::DenseNet> snapshot;

    int act_greedy(std::span<const double> state) const;
};

/// Copies the central online network to every agent.
void sync_shared_policy(const QPolicy& central, std::span<PolicyAgent> agents);

} // namespace livemap::rl
