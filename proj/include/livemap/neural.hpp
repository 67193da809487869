#pragma once

// Minimal dense feed-forward network: leaky-rectifier hidden layers, linear
// output, reverse-mode gradients for a per-action weighted squared TD loss, and
// an adaptive-moment optimizer.

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace livemap::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class DenseNet {
public:
    DenseNet() = default;

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases from `seed`.
    DenseNet(std::vector<int> layer_sizes, std::uint64_t seed, double leak = 0.01);

    const std::vector<int>& layer_sizes() const { return sizes_; }
    int input_size() const { return sizes_.front(); }
    int output_size() const { return sizes_.back(); }
    std::size_t layer_count() const { return weights_.size(); }
    double leak() const { return leak_; }

    Matrix& weight(std::size_t l) { return weights_[l]; }
    const Matrix& weight(std::size_t l) const { return weights_[l]; }
    Vector& bias(std::size_t l) { return biases_[l]; }
    const Vector& bias(std::size_t l) const { return biases_[l]; }

    Vector forward(std::span<const double> x) const;
    /// Columns of `inputs` are samples.
    Matrix forward(const Matrix& inputs) const;

    /// Hidden pre-activations per layer for a batch (used to keep gradient
    /// checks away from the rectifier kink).
    std::vector<Matrix> hidden_preactivations(const Matrix& inputs) const;

    std::size_t parameter_count() const;
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> flat);

    friend bool operator==(const DenseNet& a, const DenseNet& b);

private:
    std::vector<int> sizes_;
    std::vector<Matrix> weights_; // weights_[l] is out x in
    std::vector<Vector> biases_;
    double leak_ = 0.01;
};

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    static Gradients zeros_like(const DenseNet& net);
    std::vector<double> flatten() const;
    void unflatten(std::span<const double> flat);
    Gradients& operator*=(double s);
};

/// One minibatch of (input, target, action, importance weight).
struct Batch {
    Matrix inputs; // input_size x n
    std::vector<double> targets;
    std::vector<int> actions;
    std::vector<double> weights;

    std::size_t size() const { return targets.size(); }
};

struct BackwardResult {
    Gradients grads;
    std::vector<double> td_errors; // target - Q(x)[action]
    double loss = 0.0;
};

/// mean_i w_i (Q(x_i)[a_i] - t_i)^2
double loss(const DenseNet& net, const Batch& batch);

BackwardResult backward(const DenseNet& net, const Batch& batch);

struct AdamState {
    double learning_rate = 0.5e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t steps = 0;
    Gradients first_moment;
    Gradients second_moment;
};

AdamState make_adam(const DenseNet& net, double learning_rate = 0.5e-3);

void adam_step(DenseNet& net, const Gradients& grads, AdamState& opt);

/// Max over parameters of |fd - g| / max(|fd| + |g|, 1e-7) using central differences.
double gradient_discrepancy(const DenseNet& net, const Batch& batch, const Gradients& grads,
                            double epsilon = 1e-5);

/// gradient_discrepancy against backward().
double grad_check(const DenseNet& net, const Batch& batch, double epsilon = 1e-5);

/// Flat binary snapshot: "LMDNET01", u64 layer count, u64 sizes, f64 leak,
/// then each layer's weights (row-major) and biases; little-endian throughout.
void save(std::ostream& out, const DenseNet& net);
DenseNet load(std::istream& in);

void save_file(const std::string& path, const DenseNet& net);
DenseNet load_file(const std::string& path);

// Little-endian scalar I/O shared with the policy checkpoint format.
void write_u64(std::ostream& out, std::uint64_t v);
void write_f64(std::ostream& out, double v);
std::uint64_t read_u64(std::istream& in);
double read_f64(std::istream& in);

} // namespace livemap::nn
