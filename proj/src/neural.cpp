#include "livemap/neural.hpp"

#include "livemap/common.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

namespace livemap::nn {

namespace {

constexpr char kMagic[8] = {'L', 'M', 'D', 'N', 'E', 'T', '0', '1'};

Matrix leaky(const Matrix& z, double leak) {
    return z.unaryExpr([leak](double v) { return v > 0.0 ? v : leak * v; });
}

Matrix leaky_grad(const Matrix& z, double leak) {
    return z.unaryExpr([leak](double v) { return v > 0.0 ? 1.0 : leak; });
}

void check_batch(const DenseNet& net, const Batch& batch) {
    const auto n = static_cast<Eigen::Index>(batch.size());
    if (batch.size() == 0) throw InvalidInput("batch is empty");
    if (batch.inputs.rows() != net.input_size() || batch.inputs.cols() != n ||
        batch.actions.size() != batch.size() || batch.weights.size() != batch.size()) {
        throw InvalidInput("batch dimensions do not match the network");
    }
    for (int a : batch.actions) {
        if (a < 0 || a >= net.output_size()) throw InvalidInput("batch action out of range");
    }
}

} // namespace

DenseNet::DenseNet(std::vector<int> layer_sizes, std::uint64_t seed, double leak)
    : sizes_(std::move(layer_sizes)), leak_(leak) {
    if (sizes_.size() < 2) throw InvalidInput("network needs at least input and output sizes");
    for (int s : sizes_) {
        if (s <= 0) throw InvalidInput("layer sizes must be positive");
    }
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        const int in = sizes_[l];
        const int out = sizes_[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Matrix w(out, in);
        for (int r = 0; r < out; ++r) {
            for (int c = 0; c < in; ++c) w(r, c) = dist(rng);
        }
        Vector b(out);
        for (int r = 0; r < out; ++r) b(r) = dist(rng);
        weights_.push_back(std::move(w));
        biases_.push_back(std::move(b));
    }
}

Vector DenseNet::forward(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != input_size()) throw InvalidInput("forward: input size mismatch");
    Matrix in = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
    return forward(in).col(0);
}

Matrix DenseNet::forward(const Matrix& inputs) const {
    if (inputs.rows() != input_size()) throw InvalidInput("forward: input size mismatch");
    Matrix a = inputs;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Matrix z = weights_[l] * a;
        z.colwise() += biases_[l];
        a = (l + 1 < weights_.size()) ? leaky(z, leak_) : std::move(z);
    }
    return a;
}

std::vector<Matrix> DenseNet::hidden_preactivations(const Matrix& inputs) const {
    std::vector<Matrix> out;
    Matrix a = inputs;
    for (std::size_t l = 0; l + 1 < weights_.size(); ++l) {
        Matrix z = weights_[l] * a;
        z.colwise() += biases_[l];
        a = leaky(z, leak_);
        out.push_back(std::move(z));
    }
    return out;
}

std::size_t DenseNet::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
    }
    return n;
}

std::vector<double> DenseNet::parameters() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const Matrix& w = weights_[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
        }
        for (Eigen::Index r = 0; r < biases_[l].size(); ++r) flat.push_back(biases_[l](r));
    }
    return flat;
}

void DenseNet::set_parameters(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw InvalidInput("set_parameters: size mismatch");
    std::size_t k = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Matrix& w = weights_[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat[k++];
        }
        for (Eigen::Index r = 0; r < biases_[l].size(); ++r) biases_[l](r) = flat[k++];
    }
}

bool operator==(const DenseNet& a, const DenseNet& b) {
    return a.sizes_ == b.sizes_ && a.leak_ == b.leak_ && a.parameters() == b.parameters();
}

Gradients Gradients::zeros_like(const DenseNet& net) {
    Gradients g;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        g.weights.push_back(Matrix::Zero(net.weight(l).rows(), net.weight(l).cols()));
        g.biases.push_back(Vector::Zero(net.bias(l).size()));
    }
    return g;
}

std::vector<double> Gradients::flatten() const {
    std::vector<double> flat;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (Eigen::Index r = 0; r < weights[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < weights[l].cols(); ++c) flat.push_back(weights[l](r, c));
        }
        for (Eigen::Index r = 0; r < biases[l].size(); ++r) flat.push_back(biases[l](r));
    }
    return flat;
}

void Gradients::unflatten(std::span<const double> flat) {
    std::size_t k = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (Eigen::Index r = 0; r < weights[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < weights[l].cols(); ++c) weights[l](r, c) = flat[k++];
        }
        for (Eigen::Index r = 0; r < biases[l].size(); ++r) biases[l](r) = flat[k++];
    }
}

Gradients& Gradients::operator*=(double s) {
    for (auto& w : weights) w *= s;
    for (auto& b : biases) b *= s;
    return *this;
}

double loss(const DenseNet& net, const Batch& batch) {
    check_batch(net, batch);
    const Matrix q = net.forward(batch.inputs);
    double sum = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double e = q(batch.actions[i], static_cast<Eigen::Index>(i)) - batch.targets[i];
        sum += batch.weights[i] * e * e;
    }
    return sum / static_cast<double>(batch.size());
}

BackwardResult backward(const DenseNet& net, const Batch& batch) {
    check_batch(net, batch);
    const std::size_t layers = net.layer_count();
    const double leak = net.leak();

    // Forward pass keeping pre-activations and activations.
    std::vector<Matrix> activations;
    std::vector<Matrix> pre;
    activations.push_back(batch.inputs);
    for (std::size_t l = 0; l < layers; ++l) {
        Matrix z = net.weight(l) * activations.back();
        z.colwise() += net.bias(l);
        if (l + 1 < layers) {
            activations.push_back(leaky(z, leak));
        } else {
            activations.push_back(z);
        }
        pre.push_back(std::move(z));
    }

    const Matrix& q = activations.back();
    const auto n = static_cast<Eigen::Index>(batch.size());
    BackwardResult result;
    result.td_errors.resize(batch.size());
    Matrix dz = Matrix::Zero(q.rows(), n);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double e = q(batch.actions[ui], i) - batch.targets[ui];
        result.td_errors[ui] = -e;
        sum += batch.weights[ui] * e * e;
        dz(batch.actions[ui], i) = 2.0 * batch.weights[ui] * e / static_cast<double>(n);
    }
    result.loss = sum / static_cast<double>(n);

    result.grads = Gradients::zeros_like(net);
    for (std::size_t l = layers; l-- > 0;) {
        result.grads.weights[l].noalias() = dz * activations[l].transpose();
        result.grads.biases[l] = dz.rowwise().sum();
        if (l == 0) break;
        Matrix da = net.weight(l).transpose() * dz;
        dz = da.cwiseProduct(leaky_grad(pre[l - 1], leak));
    }
    return result;
}

AdamState make_adam(const DenseNet& net, double learning_rate) {
    AdamState s;
    s.learning_rate = learning_rate;
    s.first_moment = Gradients::zeros_like(net);
    s.second_moment = Gradients::zeros_like(net);
    return s;
}

void adam_step(DenseNet& net, const Gradients& grads, AdamState& opt) {
    if (opt.first_moment.weights.size() != net.layer_count()) {
        opt.first_moment = Gradients::zeros_like(net);
        opt.second_moment = Gradients::zeros_like(net);
    }
    if (grads.weights.size() != net.layer_count()) throw InvalidInput("adam_step: gradient shape mismatch");
    ++opt.steps;
    const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.steps));
    const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.steps));
    const double lr = opt.learning_rate;
    const double b1 = opt.beta1, b2 = opt.beta2, eps = opt.epsilon;

    auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
        if (param.rows() != g.rows() || param.cols() != g.cols()) {
            throw InvalidInput("adam_step: gradient shape mismatch");
        }
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
        param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    };
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        update(net.weight(l), grads.weights[l], opt.first_moment.weights[l], opt.second_moment.weights[l]);
        update(net.bias(l), grads.biases[l], opt.first_moment.biases[l], opt.second_moment.biases[l]);
    }
}

double gradient_discrepancy(const DenseNet& net, const Batch& batch, const Gradients& grads, double epsilon) {
    DenseNet probe = net;
    std::vector<double> params = net.parameters();
    const std::vector<double> analytic = grads.flatten();
    if (analytic.size() != params.size()) throw InvalidInput("gradient_discrepancy: shape mismatch");
    std::vector<double> numeric(params.size());
    double scale = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double saved = params[k];
        params[k] = saved + epsilon;
        probe.set_parameters(params);
        const double up = loss(probe, batch);
        params[k] = saved - epsilon;
        probe.set_parameters(params);
        const double down = loss(probe, batch);
        params[k] = saved;
        numeric[k] = (up - down) / (2.0 * epsilon);
        scale = std::max({scale, std::abs(numeric[k]), std::abs(analytic[k])});
    }
    // Entries far below the largest one sit at the round-off level of the
    // differences, so they are measured against a floor tied to that scale.
    const double floor = std::max(1e-4 * scale, 1e-12);
    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double denom = std::max(std::abs(numeric[k]) + std::abs(analytic[k]), floor);
        worst = std::max(worst, std::abs(numeric[k] - analytic[k]) / denom);
    }
    return worst;
}

double grad_check(const DenseNet& net, const Batch& batch, double epsilon) {
    return gradient_discrepancy(net, batch, backward(net, batch).grads, epsilon);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFFu);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

void write_f64(std::ostream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t read_u64(std::istream& in) {
    unsigned char buf[8];
    if (!in.read(reinterpret_cast<char*>(buf), 8)) throw IoError("unexpected end of snapshot");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

void save(std::ostream& out, const DenseNet& net) {
    out.write(kMagic, sizeof(kMagic));
    write_u64(out, net.layer_sizes().size());
    for (int s : net.layer_sizes()) write_u64(out, static_cast<std::uint64_t>(s));
    write_f64(out, net.leak());
    for (double p : net.parameters()) write_f64(out, p);
    if (!out) throw IoError("failed writing network snapshot");
}

DenseNet load(std::istream& in) {
    char magic[8];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError("not a network snapshot");
    }
    const std::uint64_t count = read_u64(in);
    if (count < 2 || count > 64) throw IoError("corrupt layer header");
    std::vector<int> sizes;
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t s = read_u64(in);
        if (s == 0 || s > (1u << 20)) throw IoError("corrupt layer size");
        sizes.push_back(static_cast<int>(s));
    }
    const double leak = read_f64(in);
    DenseNet net(sizes, 0, leak);
    std::vector<double> params(net.parameter_count());
    for (double& p : params) p = read_f64(in);
    net.set_parameters(params);
    return net;
}

void save_file(const std::string& path, const DenseNet& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    save(out, net);
}

DenseNet load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return load(in);
}

} // namespace livemap::nn
