#pragma once

// Proportional prioritized experience replay over a sum tree.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace livemap::rl {

struct Transition {
    std::vector<double> state;
    int action = 0;
    double reward = 0.0; // negative latency in seconds
    std::vector<double> next_state;
    bool done = false;
};

struct ReplayParams {
    std::size_t capacity = 50000;
    double alpha = 0.6;           // priority exponent
    double priority_floor = 1e-3; // added to |TD error|
};

class PrioritizedReplay {
public:
    explicit PrioritizedReplay(ReplayParams params = {});

    struct Sample {
        std::vector<std::size_t> indices;
        std::vector<double> weights; // importance weights normalised by the buffer maximum
        std::vector<const Transition*> items;
    };

    /// Inserts with the current maximum priority (1.0 when empty), evicting the oldest.
    std::size_t store(Transition t);

    /// Stratified proportional sampling; nullopt while fewer than batch_size items are held.
    std::optional<Sample> sample(std::size_t batch_size, std::mt19937_64& rng, double beta) const;

    /// Sets the raw priority of a slot (already including the floor).
    void update_priority(std::size_t index, double priority);

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return params_.capacity; }
    const ReplayParams& params() const { return params_; }

    double priority(std::size_t index) const { return raw_[index]; }
    double max_priority() const;
    /// Sum of p^alpha over stored items, as held at the tree root.
    double total() const { return sum_[1]; }
    /// Same quantity summed directly over leaves.
    double leaf_sum() const;
    double probability(std::size_t index) const;
    const Transition& at(std::size_t index) const { return items_[index]; }

private:
    void set_leaf(std::size_t index, double raw);
    std::size_t find_prefix(double mass) const;

    ReplayParams params_;
    std::size_t leaves_ = 1;
    std::vector<double> sum_; // p^alpha
    std::vector<double> min_; // p^alpha, +inf for empty
    std::vector<double> max_; // raw p, 0 for empty
    std::vector<double> raw_;
    std::vector<Transition> items_;
    std::size_t size_ = 0;
    std::size_t next_ = 0;
};

} // namespace livemap::rl
