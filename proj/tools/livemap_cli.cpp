#include "livemap/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace ex = livemap::experiment;

namespace {

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kConfig = 3, kIo = 4 };

livemap::ExperimentConfig config_from(const std::string& path) {
    return path.empty() ? livemap::ExperimentConfig{} : livemap::load_config(path);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

ex::TrainMode train_mode(ex::Algorithm a) {
    switch (a) {
    case ex::Algorithm::LiveMap: return ex::TrainMode::Central;
    case ex::Algorithm::LiveMapDist: return ex::TrainMode::Distributed;
    case ex::Algorithm::LiveMapLite: return ex::TrainMode::CentralAll;
    default: throw livemap::InvalidInput("train: '" + ex::algorithm_name(a) + "' has no policy to train");
    }
}

void print_summary(const ex::Summary& s) {
    std::cout << s.algorithm << ": tasks=" << s.tasks << " mean_latency_s=" << ex::format_fixed(s.mean_latency_s)
              << " p95=" << ex::format_fixed(s.p95) << " coverage_mean=" << ex::format_fixed(s.coverage_mean)
              << " fulfillment=" << ex::format_fixed(s.fulfillment_rate) << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Crowdsourced dynamic-map simulator over vehicular edge computing"};
    app.require_subcommand(1);

    std::string config_path;
    std::string algo = "livemap";
    std::uint64_t seed = 1;
    std::int64_t steps = -1;
    std::string out_dir;
    std::string checkpoint;
    std::string param;
    std::string values;

    auto* run = app.add_subcommand("run", "Evaluate one algorithm and write tasks/coverage/summary CSVs");
    run->add_option("--config", config_path, "JSON config (defaults when omitted)");
    run->add_option("--algo", algo, "livemap, livemap-dist, livemap-lite, eo, lp, ro, rm");
    run->add_option("--seed", seed, "master seed");
    run->add_option("--steps", steps, "training steps for learned algorithms (overrides the config)");
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--checkpoint", checkpoint, "load this policy instead of training");

    auto* train = app.add_subcommand("train", "Train (or resume) a partition policy checkpoint");
    train->add_option("--config", config_path, "JSON config");
    train->add_option("--algo", algo, "livemap (central), livemap-dist (distributed) or livemap-lite");
    train->add_option("--seed", seed, "master seed");
    train->add_option("--steps", steps, "optimisation steps to add (default from config)");
    train->add_option("--checkpoint", checkpoint, "checkpoint path")->required();
    train->add_option("--out", out_dir, "directory for train_log.csv");

    auto* sweep = app.add_subcommand("sweep", "Run a grid of (value, algorithm) cells");
    sweep->add_option("--config", config_path, "JSON config");
    sweep->add_option("--algo", algo, "comma-separated algorithms");
    sweep->add_option("--seed", seed, "master seed");
    sweep->add_option("--steps", steps, "training steps for learned algorithms");
    sweep->add_option("--param", param, "vehicles, bandwidth or servers")->required();
    sweep->add_option("--values", values, "comma-separated values")->required();
    sweep->add_option("--out", out_dir, "output directory");

    auto* check = app.add_subcommand("validate-config", "Parse and validate a config file");
    check->add_option("--config", config_path, "JSON config")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        livemap::ExperimentConfig config = config_from(config_path);
        if (steps >= 0) config.train.train_steps = steps;

        if (*check) {
            livemap::validate(config);
            std::cout << "ok\n";
        } else if (*run) {
            const ex::Algorithm a = ex::parse_algorithm(algo);
            ex::RunOptions opt;
            opt.out_dir = out_dir;
            if (!checkpoint.empty()) opt.checkpoint = checkpoint;
            print_summary(ex::run(config, a, seed, opt).summary);
        } else if (*train) {
            const ex::TrainMode mode = train_mode(ex::parse_algorithm(algo));
            const ex::TrainResult r = ex::train(config, mode, config.train.train_steps, seed, checkpoint, out_dir);
            std::cout << (r.resumed ? "resumed, " : "") << "steps=" << r.steps << '\n';
            if (!r.log.empty()) {
                const auto& last = r.log.back();
                std::cout << "loss=" << ex::format_fixed(last.loss)
                          << " rolling_latency_s=" << ex::format_fixed(last.rolling_latency_s) << '\n';
            }
        } else if (*sweep) {
            std::vector<double> vals;
            for (const auto& v : split_list(values)) {
                try {
                    vals.push_back(std::stod(v));
                } catch (const std::exception&) {
                    throw livemap::InvalidInput("sweep: bad value '" + v + "'");
                }
            }
            std::vector<ex::Algorithm> algos;
            for (const auto& name : split_list(algo)) algos.push_back(ex::parse_algorithm(name));
            for (const auto& row : ex::sweep(config, param, vals, algos, seed, out_dir)) {
                std::cout << row.parameter << '=' << ex::format_fixed(row.value) << ' ' << row.algorithm
                          << " mean_latency_s=" << ex::format_fixed(row.mean_latency_s)
                          << " p95=" << ex::format_fixed(row.p95_latency_s) << '\n';
            }
        }
    } catch (const livemap::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const livemap::InvalidInput& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const livemap::IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kOk;
}
