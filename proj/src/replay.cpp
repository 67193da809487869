#include "livemap/replay.hpp"

#include "livemap/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace livemap::rl {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

PrioritizedReplay::PrioritizedReplay(ReplayParams params) : params_(params) {
    if (params_.capacity == 0) throw InvalidInput("replay capacity must be positive");
    while (leaves_ < params_.capacity) leaves_ <<= 1;
    sum_.assign(2 * leaves_, 0.0);
    min_.assign(2 * leaves_, kInf);
    max_.assign(2 * leaves_, 0.0);
    raw_.assign(params_.capacity, 0.0);
    items_.resize(params_.capacity);
}

void PrioritizedReplay::set_leaf(std::size_t index, double raw) {
    raw_[index] = raw;
    std::size_t node = index + leaves_;
    const double scaled = std::pow(raw, params_.alpha);
    sum_[node] = scaled;
    min_[node] = scaled;
    max_[node] = raw;
    // Internal nodes are recomputed from their children, never patched by deltas,
    // so the root always equals the pairwise sum of the current leaves.
    for (node >>= 1; node >= 1; node >>= 1) {
        sum_[node] = sum_[2 * node] + sum_[2 * node + 1];
        min_[node] = std::min(min_[2 * node], min_[2 * node + 1]);
        max_[node] = std::max(max_[2 * node], max_[2 * node + 1]);
    }
}

double PrioritizedReplay::max_priority() const { return size_ == 0 ? 1.0 : max_[1]; }

std::size_t PrioritizedReplay::store(Transition t) {
    const double p = max_priority();
    const std::size_t index = next_;
    items_[index] = std::move(t);
    set_leaf(index, p);
    next_ = (next_ + 1) % params_.capacity;
    size_ = std::min(size_ + 1, params_.capacity);
    return index;
}

void PrioritizedReplay::update_priority(std::size_t index, double priority) {
    if (index >= size_) throw InvalidInput("update_priority: index out of range");
    if (!(priority > 0.0) || !std::isfinite(priority)) throw InvalidInput("update_priority: priority must be positive");
    set_leaf(index, priority);
}

double PrioritizedReplay::leaf_sum() const {
    double s = 0.0;
    for (std::size_t i = 0; i < size_; ++i) s += sum_[leaves_ + i];
    return s;
}

double PrioritizedReplay::probability(std::size_t index) const {
    return sum_[leaves_ + index] / sum_[1];
}

std::size_t PrioritizedReplay::find_prefix(double mass) const {
    std::size_t node = 1;
    while (node < leaves_) {
        const std::size_t left = 2 * node;
        if (mass < sum_[left] || sum_[left + 1] <= 0.0) {
            node = left;
        } else {
            mass -= sum_[left];
            node = left + 1;
        }
    }
    return std::min(node - leaves_, size_ - 1);
}

std::optional<PrioritizedReplay::Sample> PrioritizedReplay::sample(std::size_t batch_size, std::mt19937_64& rng,
                                                                  double beta) const {
    if (batch_size == 0 || size_ < batch_size) return std::nullopt;
    Sample out;
    out.indices.reserve(batch_size);
    out.weights.reserve(batch_size);
    out.items.reserve(batch_size);
    const double total = sum_[1];
    const double segment = total / static_cast<double>(batch_size);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double n = static_cast<double>(size_);
    const double max_weight = std::pow(n * (min_[1] / total), -beta);
    for (std::size_t k = 0; k < batch_size; ++k) {
        const double mass = (static_cast<double>(k) + unit(rng)) * segment;
        const std::size_t idx = find_prefix(std::min(mass, std::nextafter(total, 0.0)));
        const double p = sum_[leaves_ + idx] / total;
        out.indices.push_back(idx);
        out.weights.push_back(std::pow(n * p, -beta) / max_weight);
        out.items.push_back(&items_[idx]);
    }
    return out;
}

} // namespace livemap::rl
