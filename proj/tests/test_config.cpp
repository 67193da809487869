#include "livemap/config.hpp"

#include <doctest.h>

#include <json.hpp>

#include <string>

using namespace livemap;
using nlohmann::json;

namespace {

std::string error_path(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.path();
    }
    return "<accepted>";
}

std::string with(const char* section, const char* key, const json& value) {
    json j = json::parse(dump_config(ExperimentConfig{}));
    j[section][key] = value;
    return j.dump();
}

} // namespace

TEST_CASE("defaults validate") {
    CHECK_NOTHROW(validate(ExperimentConfig{}));
    CHECK(ExperimentConfig{}.max_partition() == 4);
}

TEST_CASE("dump and parse round trip") {
    ExperimentConfig c;
    c.scenario.vehicles = 17;
    c.scenario.servers = 2;
    c.server_multipliers = {1.0, 2.5};
    c.rl.hidden = {16, 8};
    c.map.ttl_s = 4.5;
    c.output.write_deltas = false;
    const std::string text = dump_config(c);
    const ExperimentConfig back = parse_config(text);
    CHECK(back.scenario.vehicles == 17);
    CHECK(back.server_multipliers == c.server_multipliers);
    CHECK(back.rl.hidden == c.rl.hidden);
    CHECK(back.map.ttl_s == 4.5);
    CHECK_FALSE(back.output.write_deltas);
    CHECK(dump_config(back) == text);
}

TEST_CASE("missing sections keep defaults") {
    const ExperimentConfig c = parse_config(R"({"schema_version": 1, "scenario": {"vehicles": 7}})");
    CHECK(c.scenario.vehicles == 7);
    CHECK(c.scenario.servers == ExperimentConfig{}.scenario.servers);
}

TEST_CASE("unknown keys and sections name their path") {
    CHECK(error_path(R"({"schema_version": 1, "scenario": {"foo": 1}})") == "scenario.foo");
    CHECK(error_path(R"({"schema_version": 1, "extras": {}})") == "extras");
    CHECK(error_path(R"({"schema_version": 1, "scenario": 3})") == "scenario");
}

TEST_CASE("type mismatches name their path") {
    CHECK(error_path(with("scenario", "vehicles", "fifty")) == "scenario.vehicles");
    CHECK(error_path(with("scenario", "vehicles", 2.5)) == "scenario.vehicles");
    CHECK(error_path(with("rl", "learning_rate", true)) == "rl.learning_rate");
    CHECK(error_path(with("output", "write_deltas", 1)) == "output.write_deltas");
    CHECK(error_path(with("rl", "hidden", json::array({64, "x"}))) == "rl.hidden[1]");
}

TEST_CASE("schema version is required and checked") {
    CHECK(error_path(R"({"scenario": {}})") == "schema_version");
    CHECK(error_path(R"({"schema_version": 2})") == "schema_version");
    CHECK(error_path(R"({"schema_version": "1"})") == "schema_version");
    CHECK(error_path("[1, 2]") == "<document>");
    CHECK(error_path("{not json") == "<document>");
}

TEST_CASE("out-of-range values report the field") {
    CHECK(error_path(with("rl", "gamma", 1.0)) == "rl.gamma");
    CHECK(error_path(with("scenario", "vehicles", 0)) == "scenario.vehicles");
    CHECK(error_path(with("matching", "ttl_s", 0.0)) == "matching.ttl_s");
    CHECK(error_path(with("edge", "server_multipliers", json::array({1.0}))) == "edge.server_multipliers");
    CHECK(error_path(with("measurement", "onboard_mean_s", json::array({0.1}))) == "measurement.onboard_mean_s");
    CHECK(error_path(with("rl", "batch_size", 0)) == "rl.batch_size");
}

TEST_CASE("load_config reports unreadable files as i/o errors") {
    CHECK_THROWS_AS(load_config("/nonexistent/dir/config.json"), IoError);
}
