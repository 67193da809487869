#pragma once

// Experiment harness: builds world, simulator, map service and controller,
// drives the closed loop, trains policies and writes the CSV artifacts.

#include "livemap/config.hpp"
#include "livemap/control.hpp"
#include "livemap/simnet.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace livemap::experiment {

enum class Algorithm { LiveMap, LiveMapDist, LiveMapLite, EO, LP, RO, RM };

/// Throws InvalidInput for an unknown name.
Algorithm parse_algorithm(const std::string& name);
std::string algorithm_name(Algorithm a);
bool uses_policy(Algorithm a);
std::vector<std::string> algorithm_names();

enum class TrainMode { Central, Distributed, CentralAll };

struct CoverageSample {
    double time_s = 0.0;
    double fraction = 1.0; // rounded to 6 decimals when sampled
    int scheduled = 0;
};

struct Summary {
    std::string algorithm;
    std::size_t tasks = 0;
    double mean_latency_s = 0.0;
    double p50 = 0.0;
    double p95 = 0.0;
    double coverage_mean = 0.0;
    double fulfillment_rate = 0.0;
};

struct TrainLogRow {
    std::int64_t step = 0;
    double loss = 0.0;
    double epsilon = 0.0;
    double rolling_latency_s = 0.0;
};

struct RunMetrics {
    Summary summary;
    double tick_s = 0.001;
    std::vector<sim::TaskRecord> tasks;       // scheduled offloads
    std::vector<sim::TaskRecord> local_tasks; // unscheduled, onboard only
    std::vector<CoverageSample> coverage;
    double identity_rate = 1.0;
    std::int64_t identity_detections = 0;
    std::int64_t resyncs = 0;
    std::string deltas_csv; // filled when deltas are recorded
};

/// Linear-interpolation percentile of ascending values, p in [0, 1].
double percentile(const std::vector<double>& sorted, double p);

/// Empirical CDF points (latency_s, fraction <= latency).
std::vector<std::pair<double, double>> latency_cdf(const RunMetrics& m);

/// Fills the summary from the task and coverage records.
Summary summarize(const std::string& algorithm, const RunMetrics& m, double beta);

struct EpisodeOptions {
    double duration_s = 60.0;
    bool explore = false;
    bool learn = false;
    std::int64_t max_train_steps = -1;  // stop once the policy reaches this many steps
    std::int64_t max_offloads = -1;     // stop after this many completed offloads
    bool record_deltas = false;
    std::vector<control::RegressionSample>* regression_samples = nullptr;
    std::vector<TrainLogRow>* train_log = nullptr;
    std::function<void(const TrainLogRow&)> on_log;
};

struct EpisodeSeeds {
    std::uint64_t radio = 0;
    std::uint64_t measurement = 0;
    std::uint64_t sensing = 0;

    static EpisodeSeeds from_master(std::uint64_t master);
};

/// One closed-loop simulation of `world` under `controller`.
RunMetrics run_episode(const ExperimentConfig& config, const scenario::World& world, control::Controller& controller,
                       const EpisodeSeeds& seeds, const EpisodeOptions& options, std::mt19937_64& explore_rng);

/// Input width of the policy for a training mode.
int state_size(TrainMode mode, int max_partition);
std::unique_ptr<rl::QPolicy> make_policy(const ExperimentConfig& config, TrainMode mode, std::uint64_t seed);

/// Trains `policy` on fresh worlds derived from `seed` until it has taken
/// `steps` more optimisation steps. `on_log` sees every logged row.
std::vector<TrainLogRow> train_policy(const ExperimentConfig& config, TrainMode mode, rl::QPolicy& policy,
                                      std::int64_t steps, std::uint64_t seed,
                                      const std::function<void(const TrainLogRow&)>& on_log = {});

/// Harvests regression samples from random-partition runs and fits the model.
control::RegressionModel fit_regression_baseline(const ExperimentConfig& config, std::uint64_t seed);

struct RunOptions {
    std::string out_dir;                   // empty: write nothing
    std::optional<std::string> checkpoint; // learned algorithms load this instead of training
};

/// Full run of one algorithm on the evaluation world for `seed`.
RunMetrics run(const ExperimentConfig& config, Algorithm algorithm, std::uint64_t seed, const RunOptions& options = {});

struct TrainResult {
    std::int64_t steps = 0;
    bool resumed = false;
    std::vector<TrainLogRow> log;
};

/// Trains (or resumes) a checkpoint, writing it every `checkpoint_every` logs
/// and at the end, plus train_log.csv and state_schema.txt into `out_dir`.
TrainResult train(const ExperimentConfig& config, TrainMode mode, std::int64_t steps, std::uint64_t seed,
                  const std::string& checkpoint_path, const std::string& out_dir);

struct SweepRow {
    std::string parameter;
    double value = 0.0;
    std::string algorithm;
    double mean_latency_s = 0.0;
    double p95_latency_s = 0.0;
    double fulfillment_rate = 0.0;
};

/// Applies one sweep value to a copy of the config. Parameters: vehicles,
/// bandwidth, servers.
ExperimentConfig with_parameter(const ExperimentConfig& config, const std::string& parameter, double value);

std::vector<SweepRow> sweep(const ExperimentConfig& config, const std::string& parameter,
                            const std::vector<double>& values, const std::vector<Algorithm>& algorithms,
                            std::uint64_t seed, const std::string& out_dir = {});

// CSV writers, fixed six-decimal formatting.
std::string format_fixed(double v);
void write_tasks_csv(const std::string& path, const std::vector<sim::TaskRecord>& tasks, double tick_s);
void write_coverage_csv(const std::string& path, const std::vector<CoverageSample>& samples);
void write_summary_csv(const std::string& path, const std::vector<Summary>& rows);
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);
void write_train_log_csv(const std::string& path, const std::vector<TrainLogRow>& rows);
void write_text(const std::string& path, const std::string& text);

} // namespace livemap::experiment
