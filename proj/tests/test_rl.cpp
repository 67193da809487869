#include "livemap/rl.hpp"
#include "support/sanity.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace livemap;
using namespace livemap::rl;

namespace {

PolicyParams tiny() {
    PolicyParams p;
    p.hidden = {8};
    p.batch_size = 4;
    return p;
}

} // namespace

TEST_CASE("argmax picks the largest, ties to the lowest index") {
    const std::vector<double> q{1, 5, 2, 0, 3};
    CHECK(argmax(q) == 1);
    const std::vector<double> flat(5, 0.7);
    CHECK(argmax(flat) == 0);
}

TEST_CASE("greedy action is invariant under positive affine transforms") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> q(5);
        for (double& v : q) v = g(rng);
        const double a = scale(rng), b = g(rng) * 10;
        std::vector<double> t = q;
        for (double& v : t) v = a * v + b;
        CHECK(argmax(t) == argmax(q));
    }
}

TEST_CASE("central state layout and scaling") {
    const auto s = encode_state_central({5.0, 1.0, 2.0}, {1.0, 50, 150, 1e5});
    REQUIRE(s.size() == central_state_schema().size());
    CHECK(s[0] == 0.5);
    CHECK(s[1] == 0.5);
    CHECK(s[2] == 1.0);
    CHECK(s[3] == 0.5);
    CHECK(s[4] == 0.5);
    CHECK(s[5] == 1.0); // clamped
    CHECK(s[6] == 1.0);
}

TEST_CASE("distributed state: one-hot previous decision and clamped latency") {
    const auto first = encode_state_dist({2.0, 1.0, 1.0}, -1, 0.0, 4);
    REQUIRE(first.size() == dist_state_schema(4).size());
    CHECK(first.size() == 10);
    CHECK(first[3] == 1.0);
    CHECK(first.back() == 0.0);

    const auto s = encode_state_dist({2.0, 1.0, 1.0}, 2, 4.0, 4);
    int hot = 0;
    for (std::size_t i = 3; i < 9; ++i) hot += s[i] == 1.0 ? 1 : 0;
    CHECK(hot == 1);
    CHECK(s[3 + 3] == 1.0);
    CHECK(s.back() == 1.0);
    CHECK_THROWS_AS(encode_state_dist({}, 5, 0.0, 4), InvalidInput);
    CHECK_THROWS_AS(encode_state_dist({}, -2, 0.0, 4), InvalidInput);
}

TEST_CASE("epsilon decays monotonically to its floor; beta anneals to one") {
    QPolicy p(3, 2, tiny(), 1);
    CHECK(p.epsilon() == 1.0);
    CHECK(p.beta() == doctest::Approx(0.4));
    for (int i = 0; i < 8; ++i) p.store({{0, 0, 0}, i % 2, -1.0, {0, 0, 0}, true});
    double last = p.epsilon();
    for (int i = 0; i < 200; ++i) {
        p.train_step();
        CHECK(p.epsilon() <= last);
        CHECK(p.epsilon() >= p.params().epsilon_end);
        last = p.epsilon();
    }
    CHECK(p.steps() == 200);
    CHECK(p.beta() > 0.4);
}

TEST_CASE("exploration with epsilon one is uniform within three sigma") {
    QPolicy p(2, 5, tiny(), 3);
    std::mt19937_64 rng(9);
    const std::vector<double> s{0.3, 0.4};
    std::vector<int> counts(5, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(p.act(s, true, rng))];
    const double sigma = std::sqrt(0.2 * 0.8 / n);
    for (int c : counts) CHECK(std::abs(c / double(n) - 0.2) < 3 * sigma);
}

TEST_CASE("train_step is not ready before a full batch") {
    QPolicy p(2, 2, tiny(), 1);
    CHECK_FALSE(p.train_step());
    for (int i = 0; i < 4; ++i) p.store({{0, 1}, 0, -0.5, {0, 1}, true});
    CHECK(p.ready());
    CHECK(p.train_step());
}

TEST_CASE("done-only transitions regress onto the reward") {
    PolicyParams params = tiny();
    params.learning_rate = 1e-2;
    QPolicy p(1, 2, params, 2);
    for (int i = 0; i < 16; ++i) p.store({{1.0}, i % 2, i % 2 ? -0.2 : -0.7, {1.0}, true});
    for (int i = 0; i < 2000; ++i) p.train_step();
    const auto q = p.q_values(std::vector<double>{1.0});
    CHECK(q[0] == doctest::Approx(-0.7).epsilon(0.02));
    CHECK(q[1] == doctest::Approx(-0.2).epsilon(0.05));
}

TEST_CASE("chain values converge to the value-iteration fixed point") {
    CHECK(testing::train_chain(5000, 1) < 1e-2);
}

TEST_CASE("contextual offloading bandit reaches the optimal partition") {
    const auto r = testing::train_bandit(20000, 2);
    CHECK(r.optimal_rate >= 0.95);
}

TEST_CASE("checkpoints round trip and keep the step counter") {
    const auto path = (std::filesystem::temp_directory_path() / "livemap_test_policy.bin").string();
    QPolicy p(3, 2, tiny(), 5);
    for (int i = 0; i < 4; ++i) p.store({{0, 0, 1}, 1, -1.0, {0, 0, 1}, false});
    for (int i = 0; i < 7; ++i) p.train_step();
    p.save(path);
    QPolicy q(3, 2, tiny(), 99);
    q.load(path);
    CHECK(q.steps() == 7);
    CHECK(q.online() == p.online());
    CHECK(q.target() == p.target());

    QPolicy wrong(4, 2, tiny(), 1);
    CHECK_THROWS_AS(wrong.load(path), IoError);
    CHECK_THROWS_AS(p.save("/nonexistent-dir/x/policy.bin"), IoError);
    std::filesystem::remove(path);
}

TEST_CASE("shared snapshots follow the central policy only when synced") {
    QPolicy central(2, 3, tiny(), 1);
    std::vector<PolicyAgent> agents(3);
    sync_shared_policy(central, agents);
    const std::vector<double> probe{0.2, 0.9};
    std::mt19937_64 rng(1);
    for (const auto& a : agents) CHECK(a.act_greedy(probe) == central.act(probe, false, rng));

    // Push the central policy towards a different action; agents stay stale.
    const int before = agents[0].act_greedy(probe);
    const int target_action = (before + 1) % 3;
    for (int i = 0; i < 8; ++i) central.store({probe, target_action, 10.0, probe, true});
    for (int a = 0; a < 3; ++a) {
        if (a != target_action) central.store({probe, a, -10.0, probe, true});
    }
    for (int i = 0; i < 500; ++i) central.train_step();
    REQUIRE(central.act(probe, false, rng) == target_action);
    CHECK(agents[0].act_greedy(probe) == before);
    sync_shared_policy(central, agents);
    for (const auto& a : agents) CHECK(a.act_greedy(probe) == target_action);
}
