#include "livemap/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace livemap::experiment {

namespace fs = std::filesystem;

namespace {

constexpr double kFramePeriod = 0.1;
constexpr std::uint64_t kTaskMix = 0xC2B2AE3D27D4EB4Full;
constexpr std::uint64_t kEpisodeMix = 0xA0761D6478BD642Full;

struct AlgoName {
    Algorithm algo;
    const char* name;
};

constexpr AlgoName kAlgorithms[] = {
    {Algorithm::LiveMap, "livemap"}, {Algorithm::LiveMapDist, "livemap-dist"}, {Algorithm::LiveMapLite, "livemap-lite"},
    {Algorithm::EO, "eo"},           {Algorithm::LP, "lp"},                     {Algorithm::RO, "ro"},
    {Algorithm::RM, "rm"},
};

double round6(double v) { return std::round(v * 1e6) / 1e6; }

std::uint64_t episode_master(std::uint64_t seed, std::int64_t k) {
    return splitmix64(seed ^ (kEpisodeMix * static_cast<std::uint64_t>(k + 1)));
}

scenario::ScenarioConfig world_config(const ExperimentConfig& c) {
    scenario::ScenarioConfig s = c.scenario;
    s.max_partition = c.max_partition();
    return s;
}

std::unique_ptr<control::Controller> make_learned(const ExperimentConfig& c, TrainMode mode, rl::QPolicy& policy) {
    switch (mode) {
    case TrainMode::Central:
        return std::make_unique<control::HeadController>(policy, c.scenario.beta, c.control.head_period_s,
                                                         c.control.schedule_cell_m);
    case TrainMode::CentralAll:
        return std::make_unique<control::HeadController>(policy, c.scenario.beta, c.control.head_period_s,
                                                         c.control.schedule_cell_m, true);
    case TrainMode::Distributed:
        return std::make_unique<control::DHeadController>(policy, c.scenario.vehicles, c.max_partition(),
                                                          c.scenario.beta, c.control.schedule_cell_m,
                                                          c.control.sync_period_steps);
    }
    throw InvalidInput("unknown training mode");
}

TrainMode mode_for(Algorithm a) {
    switch (a) {
    case Algorithm::LiveMapDist: return TrainMode::Distributed;
    case Algorithm::LiveMapLite: return TrainMode::CentralAll;
    default: return TrainMode::Central;
    }
}

std::vector<std::string> schema_for(TrainMode mode, int max_partition) {
    return mode == TrainMode::Distributed ? rl::dist_state_schema(max_partition) : rl::central_state_schema();
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    return out;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    return f;
}

void append_delta_rows(std::string& out, const map::MapDelta& delta, const flow::IdentityTracker& tracker) {
    const std::string head = std::to_string(delta.seq) + "," + format_fixed(delta.time) + ",";
    for (const map::ObjectId id : delta.removed) out += head + "remove," + std::to_string(id) + ",,,,,\n";
    for (const auto& obj : delta.upserted) {
        const auto truth = tracker.truth_of(obj->id);
        out += head + "upsert," + std::to_string(obj->id) + "," + std::to_string(obj->class_id) + "," +
               format_fixed(obj->location.x) + "," + format_fixed(obj->location.y) + "," +
               format_fixed(obj->confidence) + "," + (truth ? std::to_string(*truth) : std::string()) + "\n";
    }
}

} // namespace

Algorithm parse_algorithm(const std::string& name) {
    for (const auto& a : kAlgorithms) {
        if (name == a.name) return a.algo;
    }
    throw InvalidInput("unknown algorithm '" + name + "'");
}

std::string algorithm_name(Algorithm a) {
    for (const auto& x : kAlgorithms) {
        if (x.algo == a) return x.name;
    }
    return "?";
}

bool uses_policy(Algorithm a) {
    return a == Algorithm::LiveMap || a == Algorithm::LiveMapDist || a == Algorithm::LiveMapLite;
}

std::vector<std::string> algorithm_names() {
    std::vector<std::string> out;
    for (const auto& a : kAlgorithms) out.emplace_back(a.name);
    return out;
}

double percentile(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

std::vector<std::pair<double, double>> latency_cdf(const RunMetrics& m) {
    std::vector<double> lat;
    lat.reserve(m.tasks.size());
    for (const auto& t : m.tasks) lat.push_back(static_cast<double>(t.latency()) * m.tick_s);
    std::sort(lat.begin(), lat.end());
    std::vector<std::pair<double, double>> cdf;
    const double n = static_cast<double>(lat.size());
    for (std::size_t i = 0; i < lat.size(); ++i) {
        if (i + 1 < lat.size() && lat[i + 1] == lat[i]) continue;
        cdf.emplace_back(lat[i], static_cast<double>(i + 1) / n);
    }
    return cdf;
}

Summary summarize(const std::string& algorithm, const RunMetrics& m, double beta) {
    Summary s;
    s.algorithm = algorithm;
    s.tasks = m.tasks.size();
    if (!m.tasks.empty()) {
        std::int64_t total = 0;
        std::vector<double> lat;
        lat.reserve(m.tasks.size());
        for (const auto& t : m.tasks) {
            total += t.latency();
            lat.push_back(static_cast<double>(t.latency()) * m.tick_s);
        }
        std::sort(lat.begin(), lat.end());
        s.mean_latency_s = static_cast<double>(total) * m.tick_s / static_cast<double>(m.tasks.size());
        s.p50 = percentile(lat, 0.5);
        s.p95 = percentile(lat, 0.95);
    }
    if (!m.coverage.empty()) {
        double sum = 0.0;
        std::size_t met = 0;
        for (const auto& c : m.coverage) {
            sum += c.fraction;
            if (c.fraction >= beta) ++met;
        }
        const double n = static_cast<double>(m.coverage.size());
        s.coverage_mean = sum / n;
        s.fulfillment_rate = static_cast<double>(met) / n;
    }
    return s;
}

EpisodeSeeds EpisodeSeeds::from_master(std::uint64_t master) {
    return {derive_seed(master, SeedStream::Radio), derive_seed(master, SeedStream::Measurement),
            derive_seed(master, SeedStream::Sensing)};
}

RunMetrics run_episode(const ExperimentConfig& config, const scenario::World& world, control::Controller& controller,
                       const EpisodeSeeds& seeds, const EpisodeOptions& options, std::mt19937_64& explore_rng) {
    const int vehicles = static_cast<int>(world.vehicles.size());

    sim::SimConfig sc;
    sc.bandwidth_hz = config.scenario.bandwidth_hz;
    sc.downlink_bandwidth_hz = config.downlink_bandwidth_hz > 0.0 ? config.downlink_bandwidth_hz : sc.bandwidth_hz;
    sc.server_multipliers = config.effective_server_multipliers();
    sc.radio = config.radio;
    sc.radio.base_station = world.base_station;
    std::vector<double> onboard;
    for (const auto& v : world.vehicles) onboard.push_back(v.onboard_multiplier());
    sim::Simulator sim(sc, config.measurement, onboard,
                       [&world](int v, double t) { return world.vehicle_position(v, t); }, seeds.radio,
                       seeds.measurement);
    flow::MapService maps(vehicles, config.map, config.matching);

    const double server_mean = std::accumulate(sc.server_multipliers.begin(), sc.server_multipliers.end(), 0.0) /
                               static_cast<double>(sc.server_multipliers.size());

    struct VehicleState {
        int prev_partition = -1;
        double prev_latency = 0.0;
        bool scheduled = true;
        bool pending = false;
        std::vector<double> state;
        int action = 0;
        int cav_count = 0;
        double channel = 0.0;
    };
    std::vector<VehicleState> vs(static_cast<std::size_t>(vehicles));

    struct Payload {
        std::vector<scenario::Detection> detections;
        flow::SelfReport self;
        double capture = 0.0;
    };
    std::unordered_map<sim::TaskId, Payload> payloads;

    rl::QPolicy* policy = controller.policy();
    RunMetrics m;
    m.tick_s = sc.tick_s;
    if (options.record_deltas) m.deltas_csv = "seq,time_s,op,object_id,class_id,x,y,confidence,truth_id\n";

    const auto total = static_cast<sim::Tick>(std::llround(options.duration_s / sc.tick_s));
    const auto sample_ticks =
        std::max<sim::Tick>(1, static_cast<sim::Tick>(std::llround(config.control.metric_interval_s / sc.tick_s)));
    std::deque<double> recent;
    double recent_sum = 0.0;
    const std::int64_t log_every = std::max<std::int64_t>(1, config.train.log_every);

    auto context = [&](int v) {
        const auto& spec = world.vehicles[static_cast<std::size_t>(v)];
        control::DecisionContext c;
        c.vehicle = v;
        c.now = sim.now();
        c.position = world.vehicle_position(v, c.now);
        c.radius_m = spec.radius_m;
        c.status = {sim.spectral_efficiency(v), spec.cpu_multiplier, spec.gpu_multiplier};
        c.system = {server_mean, sim.offloads_in_flight(), sim.edge_tasks(), sc.bandwidth_hz};
        c.previous_partition = vs[static_cast<std::size_t>(v)].prev_partition;
        c.previous_latency_s = vs[static_cast<std::size_t>(v)].prev_latency;
        c.local_map = &maps.local(v);
        c.explore = options.explore;
        c.rng = &explore_rng;
        return c;
    };

    auto launch = [&](int v) {
        auto& st = vs[static_cast<std::size_t>(v)];
        const control::DecisionContext ctx = context(v);
        control::Decision d = controller.decide(ctx);
        st.scheduled = d.scheduled;
        st.pending = false;
        if (!d.scheduled) {
            sim.submit(v, -1);
            return;
        }
        const sim::TaskId id = sim.submit(v, d.partition);
        Payload p;
        p.capture = std::floor(ctx.now / kFramePeriod + 1e-9) * kFramePeriod;
        std::mt19937_64 sense_rng(splitmix64(seeds.sensing ^ (static_cast<std::uint64_t>(id) * kTaskMix)));
        p.detections = scenario::sense(world, v, p.capture, config.sensing, sense_rng);
        p.self = {v, world.vehicle_position(v, p.capture), world.objects[static_cast<std::size_t>(v)].latent};
        payloads.emplace(id, std::move(p));
        st.cav_count = ctx.system.connected_vehicles;
        st.channel = ctx.status.spectral_efficiency;
        if (!d.state.empty()) {
            st.pending = true;
            st.state = std::move(d.state);
            st.action = d.partition;
        }
    };

    std::int64_t offloads = 0;
    bool stop = false;
    std::vector<coverage::CoverageDisk> disks(static_cast<std::size_t>(vehicles));
    std::vector<bool> flags(static_cast<std::size_t>(vehicles));

    for (sim::Tick tick = 0; tick < total && !stop; ++tick) {
        if (tick % sample_ticks == 0) {
            const double now = sim.now();
            for (int v = 0; v < vehicles; ++v) {
                disks[static_cast<std::size_t>(v)] = {v, world.vehicle_position(v, now),
                                                      world.vehicles[static_cast<std::size_t>(v)].radius_m};
            }
            controller.on_time(now, disks);
            if (tick == 0) {
                for (int v = 0; v < vehicles; ++v) launch(v);
            }
            if (auto removed = maps.maintain(now); removed && options.record_deltas) {
                append_delta_rows(m.deltas_csv, *removed, maps.identity());
            }
            int count = 0;
            for (int v = 0; v < vehicles; ++v) {
                const auto s = controller.scheduled_now(v);
                const bool on = s ? *s : vs[static_cast<std::size_t>(v)].scheduled;
                flags[static_cast<std::size_t>(v)] = on;
                count += on ? 1 : 0;
            }
            const double frac = round6(coverage::coverage_fraction(disks, flags, config.control.metric_cell_m));
            m.coverage.push_back({now, frac, count});
        }

        sim.step();
        for (const sim::Event& e : sim.drain_events()) {
            if (stop) break;
            if (e.kind == sim::Event::Kind::MapUpdate) {
                const auto it = payloads.find(e.task);
                if (it == payloads.end()) continue;
                const map::MapDelta& delta =
                    maps.ingest(it->second.detections, it->second.self, it->second.capture, sim.now());
                if (options.record_deltas) append_delta_rows(m.deltas_csv, delta, maps.identity());
                payloads.erase(it);
                continue;
            }

            const sim::TaskRecord& r = e.record;
            const int v = e.vehicle;
            auto& st = vs[static_cast<std::size_t>(v)];
            if (r.local()) {
                m.local_tasks.push_back(r);
                st.prev_partition = -1;
            } else {
                m.tasks.push_back(r);
                payloads.erase(r.id);
                const double latency = static_cast<double>(r.latency()) * sc.tick_s;
                st.prev_partition = r.partition;
                st.prev_latency = latency;
                ++offloads;
                recent.push_back(latency);
                recent_sum += latency;
                if (recent.size() > 100) {
                    recent_sum -= recent.front();
                    recent.pop_front();
                }
                if (options.regression_samples) {
                    options.regression_samples->push_back(
                        {static_cast<double>(st.cav_count), st.channel, r.partition, latency});
                }
                if (policy && st.pending) {
                    rl::Transition t{std::move(st.state), st.action, -latency, controller.encode(context(v)), false};
                    policy->store(std::move(t));
                    st.pending = false;
                    if (options.learn && policy->ready()) {
                        const std::optional<double> loss = policy->train_step();
                        controller.after_train_step();
                        if (loss && policy->steps() % log_every == 0) {
                            const TrainLogRow row{policy->steps(), *loss, policy->epsilon(),
                                                  recent_sum / static_cast<double>(recent.size())};
                            if (options.train_log) options.train_log->push_back(row);
                            if (options.on_log) options.on_log(row);
                        }
                    }
                    if (options.max_train_steps >= 0 && policy->steps() >= options.max_train_steps) stop = true;
                }
                if (options.max_offloads >= 0 && offloads >= options.max_offloads) stop = true;
            }
            if (!stop) launch(v);
        }
    }

    m.identity_rate = maps.identity().rate();
    m.identity_detections = maps.identity().detections();
    m.resyncs = maps.resyncs();
    return m;
}

int state_size(TrainMode mode, int max_partition) {
    return static_cast<int>(schema_for(mode, max_partition).size());
}

std::unique_ptr<rl::QPolicy> make_policy(const ExperimentConfig& config, TrainMode mode, std::uint64_t seed) {
    return std::make_unique<rl::QPolicy>(state_size(mode, config.max_partition()), config.max_partition() + 1,
                                         config.rl, seed);
}

std::vector<TrainLogRow> train_policy(const ExperimentConfig& config, TrainMode mode, rl::QPolicy& policy,
                                      std::int64_t steps, std::uint64_t seed,
                                      const std::function<void(const TrainLogRow&)>& on_log) {
    std::vector<TrainLogRow> log;
    if (steps <= 0) return log;
    const std::int64_t target = policy.steps() + steps;
    std::mt19937_64 explore_rng(derive_seed(seed, SeedStream::Exploration));
    const scenario::ScenarioConfig wc = world_config(config);
    for (std::int64_t k = 0; policy.steps() < target; ++k) {
        const std::int64_t before = policy.steps();
        const std::uint64_t master = episode_master(seed, k);
        const scenario::World world = scenario::generate(wc, derive_seed(master, SeedStream::World));
        auto controller = make_learned(config, mode, policy);
        EpisodeOptions opt;
        opt.duration_s = config.scenario.duration_s;
        opt.explore = true;
        opt.learn = true;
        opt.max_train_steps = target;
        opt.train_log = &log;
        opt.on_log = on_log;
        run_episode(config, world, *controller, EpisodeSeeds::from_master(master), opt, explore_rng);
        if (k > 1000 && policy.steps() == before) throw InvalidInput("training makes no progress; episodes too short");
    }
    return log;
}

control::RegressionModel fit_regression_baseline(const ExperimentConfig& config, std::uint64_t seed) {
    std::vector<control::RegressionSample> samples;
    const auto want = static_cast<std::size_t>(std::max<std::int64_t>(0, config.rm.warmup_tasks));
    std::mt19937_64 unused(0);
    const scenario::ScenarioConfig wc = world_config(config);
    for (std::int64_t k = 0; samples.size() < want; ++k) {
        const std::size_t before = samples.size();
        const std::uint64_t master = episode_master(seed ^ kTaskMix, k);
        const scenario::World world = scenario::generate(wc, derive_seed(master, SeedStream::World));
        control::RandomController ro(config.max_partition(), derive_seed(master, SeedStream::Baseline));
        EpisodeOptions opt;
        opt.duration_s = config.scenario.duration_s;
        opt.max_offloads = static_cast<std::int64_t>(want - samples.size());
        opt.regression_samples = &samples;
        run_episode(config, world, ro, EpisodeSeeds::from_master(master), opt, unused);
        if (samples.size() == before) throw FitError("regression warm-up produced no samples");
    }
    return control::rm_fit(samples, config.max_partition(), config.rm.ridge);
}

RunMetrics run(const ExperimentConfig& config, Algorithm algorithm, std::uint64_t seed, const RunOptions& options) {
    validate(config);
    const int n = config.max_partition();
    const scenario::World world =
        scenario::generate(world_config(config), derive_seed(seed, SeedStream::World));
    std::mt19937_64 explore_rng(derive_seed(seed, SeedStream::Exploration));

    std::unique_ptr<rl::QPolicy> policy;
    std::unique_ptr<control::Controller> controller;
    const TrainMode mode = mode_for(algorithm);
    switch (algorithm) {
    case Algorithm::EO: controller = std::make_unique<control::FixedController>("eo", control::eo()); break;
    case Algorithm::LP: controller = std::make_unique<control::FixedController>("lp", control::lp(n)); break;
    case Algorithm::RO:
        controller = std::make_unique<control::RandomController>(n, derive_seed(seed, SeedStream::Baseline));
        break;
    case Algorithm::RM:
        controller = std::make_unique<control::RegressionController>(fit_regression_baseline(config, seed));
        break;
    default:
        policy = make_policy(config, mode, derive_seed(seed, SeedStream::Policy));
        if (options.checkpoint) {
            policy->load(*options.checkpoint);
        } else {
            train_policy(config, mode, *policy, config.train.train_steps, seed);
        }
        controller = make_learned(config, mode, *policy);
        if (auto* d = dynamic_cast<control::DHeadController*>(controller.get())) d->sync();
        break;
    }

    EpisodeOptions opt;
    opt.duration_s = config.scenario.duration_s;
    opt.record_deltas = config.output.write_deltas && !options.out_dir.empty();
    RunMetrics m = run_episode(config, world, *controller, EpisodeSeeds::from_master(seed), opt, explore_rng);
    m.summary = summarize(algorithm_name(algorithm), m, config.scenario.beta);

    if (!options.out_dir.empty()) {
        fs::create_directories(options.out_dir);
        const fs::path dir(options.out_dir);
        write_tasks_csv((dir / "tasks.csv").string(), m.tasks, m.tick_s);
        write_coverage_csv((dir / "coverage.csv").string(), m.coverage);
        write_summary_csv((dir / "summary.csv").string(), {m.summary});
        if (config.output.write_local_tasks) write_tasks_csv((dir / "local_tasks.csv").string(), m.local_tasks, m.tick_s);
        if (opt.record_deltas) write_text((dir / "deltas.csv").string(), m.deltas_csv);
        if (policy) write_text((dir / "state_schema.txt").string(), join_lines(schema_for(mode, n)));
        write_text((dir / "config_used.json").string(), dump_config(config));
    }
    return m;
}

TrainResult train(const ExperimentConfig& config, TrainMode mode, std::int64_t steps, std::uint64_t seed,
                  const std::string& checkpoint_path, const std::string& out_dir) {
    validate(config);
    if (steps < 0) throw InvalidInput("train: steps must be non-negative");
    auto policy = make_policy(config, mode, derive_seed(seed, SeedStream::Policy));
    TrainResult result;
    if (fs::exists(checkpoint_path)) {
        policy->load(checkpoint_path);
        result.resumed = true;
    }
    // Fails fast on an unwritable path before any training time is spent.
    policy->save(checkpoint_path);

    std::int64_t logged = 0;
    auto on_log = [&](const TrainLogRow&) {
        if (++logged % 10 == 0) policy->save(checkpoint_path);
    };
    // Resumed runs see fresh worlds rather than replaying the first ones.
    const std::uint64_t train_seed = seed ^ splitmix64(static_cast<std::uint64_t>(policy->steps()));
    result.log = train_policy(config, mode, *policy, steps, result.resumed ? train_seed : seed, on_log);
    policy->save(checkpoint_path);
    result.steps = policy->steps();

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        const fs::path dir(out_dir);
        write_train_log_csv((dir / "train_log.csv").string(), result.log);
        write_text((dir / "state_schema.txt").string(), join_lines(schema_for(mode, config.max_partition())));
    }
    return result;
}

ExperimentConfig with_parameter(const ExperimentConfig& config, const std::string& parameter, double value) {
    ExperimentConfig c = config;
    if (parameter == "vehicles") {
        c.scenario.vehicles = static_cast<int>(std::lround(value));
    } else if (parameter == "bandwidth") {
        c.scenario.bandwidth_hz = value;
    } else if (parameter == "servers") {
        const int s = static_cast<int>(std::lround(value));
        c.scenario.servers = s;
        if (!c.server_multipliers.empty()) c.server_multipliers.resize(static_cast<std::size_t>(std::max(s, 0)), c.server_multipliers.back());
    } else {
        throw InvalidInput("unknown sweep parameter '" + parameter + "' (vehicles, bandwidth, servers)");
    }
    validate(c);
    return c;
}

std::vector<SweepRow> sweep(const ExperimentConfig& config, const std::string& parameter,
                            const std::vector<double>& values, const std::vector<Algorithm>& algorithms,
                            std::uint64_t seed, const std::string& out_dir) {
    if (values.empty()) throw InvalidInput("sweep: no values");
    if (algorithms.empty()) throw InvalidInput("sweep: no algorithms");
    std::vector<SweepRow> rows;
    for (const double value : values) {
        const ExperimentConfig c = with_parameter(config, parameter, value);
        for (const Algorithm a : algorithms) {
            const RunMetrics m = run(c, a, seed);
            rows.push_back({parameter, value, algorithm_name(a), m.summary.mean_latency_s, m.summary.p95,
                            m.summary.fulfillment_rate});
        }
    }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_sweep_csv((fs::path(out_dir) / "sweep.csv").string(), rows);
    }
    return rows;
}

std::string format_fixed(double v) {
    char buf[64];
    if (v == 0.0) v = 0.0; // no negative zero
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s(buf);
    if (s == "-0.000000") s = "0.000000";
    return s;
}

void write_tasks_csv(const std::string& path, const std::vector<sim::TaskRecord>& tasks, double tick_s) {
    auto f = open_out(path);
    f << "task_id,vehicle_id,partition,submit_s,onboard_s,uplink_s,queue_s,edge_s,downlink_s,latency_s\n";
    auto s = [tick_s](sim::Tick t) { return format_fixed(static_cast<double>(t) * tick_s); };
    for (const auto& t : tasks) {
        f << t.id << ',' << t.vehicle << ',' << t.partition << ',' << s(t.submit) << ',' << s(t.onboard) << ','
          << s(t.uplink) << ',' << s(t.queue) << ',' << s(t.edge) << ',' << s(t.downlink) << ',' << s(t.latency())
          << '\n';
    }
}

void write_coverage_csv(const std::string& path, const std::vector<CoverageSample>& samples) {
    auto f = open_out(path);
    f << "time_s,instant_fraction,scheduled_count\n";
    for (const auto& c : samples) f << format_fixed(c.time_s) << ',' << format_fixed(c.fraction) << ',' << c.scheduled << '\n';
}

void write_summary_csv(const std::string& path, const std::vector<Summary>& rows) {
    auto f = open_out(path);
    f << "algorithm,mean_latency_s,p50,p95,coverage_mean,fulfillment_rate\n";
    for (const auto& s : rows) {
        f << s.algorithm << ',' << format_fixed(s.mean_latency_s) << ',' << format_fixed(s.p50) << ','
          << format_fixed(s.p95) << ',' << format_fixed(s.coverage_mean) << ',' << format_fixed(s.fulfillment_rate)
          << '\n';
    }
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    auto f = open_out(path);
    f << "parameter,value,algorithm,mean_latency_s,p95_latency_s,fulfillment_rate\n";
    for (const auto& r : rows) {
        f << r.parameter << ',' << format_fixed(r.value) << ',' << r.algorithm << ',' << format_fixed(r.mean_latency_s)
          << ',' << format_fixed(r.p95_latency_s) << ',' << format_fixed(r.fulfillment_rate) << '\n';
    }
}

void write_train_log_csv(const std::string& path, const std::vector<TrainLogRow>& rows) {
    auto f = open_out(path);
    f << "step,loss,epsilon,rolling_latency_s\n";
    for (const auto& r : rows) {
        f << r.step << ',' << format_fixed(r.loss) << ',' << format_fixed(r.epsilon) << ','
          << format_fixed(r.rolling_latency_s) << '\n';
    }
}

void write_text(const std::string& path, const std::string& text) {
    auto f = open_out(path);
    f << text;
}

} // namespace livemap::experiment
