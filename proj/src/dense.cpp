#include "wdan/dense.hpp"

#include <atomic>
#include <cmath>
#include <numbers>

#include "wdan/error.hpp"

namespace wdan::dense {

namespace {

std::uint64_t next_net_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
}

double activate(Activation a, double x) {
    switch (a) {
        case Activation::identity: return x;
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::gelu: return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
    }
    return x;
}

double activate_grad(Activation a, double x) {
    switch (a) {
        case Activation::identity: return 1.0;
        case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::gelu: {
            const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
            const double pdf = std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
            return cdf + x * pdf;
        }
    }
    return 1.0;
}

void check_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size()) {
        throw Error(ErrorKind::LengthMismatch, std::string(what) + ": lengths " +
                                                   std::to_string(a.size()) + " and " +
                                                   std::to_string(b.size()) + " differ");
    }
}

}  // namespace

std::string_view to_string(Activation a) noexcept {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::gelu: return "gelu";
    }
    return "identity";
}

Activation activation_from_string(std::string_view name) {
    if (name == "identity") return Activation::identity;
    if (name == "relu") return Activation::relu;
    if (name == "gelu") return Activation::gelu;
    throw Error(ErrorKind::InvalidConfig, "unknown activation '" + std::string(name) + "'");
}

DenseNet::DenseNet() : id_(next_net_id()) {}

DenseNet::DenseNet(const std::vector<std::size_t>& dims, const std::vector<Activation>& activations)
    : id_(next_net_id()) {
    if (dims.size() < 2 || activations.size() != dims.size() - 1) {
        throw Error(ErrorKind::DimMismatch, "DenseNet needs n+1 dims for n activations");
    }
    std::size_t offset = 0;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        if (dims[i] == 0 || dims[i + 1] == 0) {
            throw Error(ErrorKind::DimMismatch, "DenseNet layer dimensions must be positive");
        }
        LayerShape shape{dims[i], dims[i + 1], activations[i], offset};
        offset += shape.param_count();
        layers_.push_back(shape);
    }
    params_.assign(offset, 0.0);
}

DenseNet::DenseNet(const DenseNet& other)
    : layers_(other.layers_), params_(other.params_), id_(next_net_id()) {}

DenseNet& DenseNet::operator=(const DenseNet& other) {
    if (this != &other) {
        layers_ = other.layers_;
        params_ = other.params_;
        ++version_;
    }
    return *this;
}

DenseNet DenseNet::mlp(std::size_t in_dim, std::size_t hidden_dim, std::size_t out_dim,
                       std::size_t hidden_layers, Activation hidden_act, Activation output_act) {
    std::vector<std::size_t> dims{in_dim};
    std::vector<Activation> acts;
    for (std::size_t i = 0; i < hidden_layers; ++i) {
        dims.push_back(hidden_dim);
        acts.push_back(hidden_act);
    }
    dims.push_back(out_dim);
    acts.push_back(output_act);
    return DenseNet(dims, acts);
}

std::size_t DenseNet::in_dim() const noexcept { return layers_.empty() ? 0 : layers_.front().in_dim; }
std::size_t DenseNet::out_dim() const noexcept { return layers_.empty() ? 0 : layers_.back().out_dim; }

std::span<double> DenseNet::mutable_params() noexcept {
    ++version_;
    return params_;
}

std::span<double> DenseNet::weights(std::size_t layer) {
    const auto& s = layers_.at(layer);
    ++version_;
    return std::span<double>(params_).subspan(s.offset, s.weight_count());
}

std::span<double> DenseNet::bias(std::size_t layer) {
    const auto& s = layers_.at(layer);
    ++version_;
    return std::span<double>(params_).subspan(s.offset + s.weight_count(), s.out_dim);
}

std::span<const double> DenseNet::weights(std::size_t layer) const {
    const auto& s = layers_.at(layer);
    return std::span<const double>(params_).subspan(s.offset, s.weight_count());
}

std::span<const double> DenseNet::bias(std::size_t layer) const {
    const auto& s = layers_.at(layer);
    return std::span<const double>(params_).subspan(s.offset + s.weight_count(), s.out_dim);
}

void DenseNet::init_xavier(std::mt19937_64& rng) {
    ++version_;
    for (const auto& s : layers_) {
        const double limit = std::sqrt(6.0 / static_cast<double>(s.in_dim + s.out_dim));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (std::size_t i = 0; i < s.weight_count(); ++i) params_[s.offset + i] = dist(rng);
        for (std::size_t i = 0; i < s.out_dim; ++i) params_[s.offset + s.weight_count() + i] = 0.0;
    }
}

void DenseNet::set_zero() {
    ++version_;
    std::fill(params_.begin(), params_.end(), 0.0);
}

std::vector<double> DenseNet::forward(std::span<const double> input) const {
    return forward_with_tape(input).output;
}

ForwardResult DenseNet::forward_with_tape(std::span<const double> input) const {
    if (layers_.empty() || input.size() != in_dim()) {
        throw Error(ErrorKind::DimMismatch, "forward: expected input of length " +
                                                std::to_string(in_dim()) + ", got " +
                                                std::to_string(input.size()));
    }
    ForwardResult result;
    result.tape.net_id = id_;
    result.tape.version = version_;
    result.tape.inputs.reserve(layers_.size());
    result.tape.pre_activations.reserve(layers_.size());

    std::vector<double> x(input.begin(), input.end());
    for (const auto& s : layers_) {
        const double* w = params_.data() + s.offset;
        const double* b = w + s.weight_count();
        std::vector<double> z(s.out_dim);
        for (std::size_t o = 0; o < s.out_dim; ++o) {
            const double* row = w + o * s.in_dim;
            double acc = b[o];
            for (std::size_t i = 0; i < s.in_dim; ++i) acc += row[i] * x[i];
            z[o] = acc;
        }
        std::vector<double> y(s.out_dim);
        for (std::size_t o = 0; o < s.out_dim; ++o) y[o] = activate(s.activation, z[o]);
        result.tape.inputs.push_back(std::move(x));
        result.tape.pre_activations.push_back(std::move(z));
        x = std::move(y);
    }
    result.output = std::move(x);
    return result;
}

void DenseNet::check_tape(const Tape& tape) const {
    if (tape.net_id != id_ || tape.version != version_ || tape.inputs.size() != layers_.size() ||
        tape.pre_activations.size() != layers_.size()) {
        throw Error(ErrorKind::TapeMismatch, "tape does not match this network's current state");
    }
}

std::vector<double> DenseNet::backward(const Tape& tape, std::span<const double> output_grad,
                                       std::span<double> param_grad) const {
    check_tape(tape);
    if (output_grad.size() != out_dim() || param_grad.size() != params_.size()) {
        throw Error(ErrorKind::DimMismatch, "backward: gradient buffer sizes do not match network");
    }
    std::vector<double> grad(output_grad.begin(), output_grad.end());
    for (std::size_t li = layers_.size(); li-- > 0;) {
        const auto& s = layers_[li];
        const auto& x = tape.inputs[li];
        const auto& z = tape.pre_activations[li];
        for (std::size_t o = 0; o < s.out_dim; ++o) grad[o] *= activate_grad(s.activation, z[o]);

        const double* w = params_.data() + s.offset;
        double* gw = param_grad.data() + s.offset;
        double* gb = gw + s.weight_count();
        std::vector<double> grad_in(s.in_dim, 0.0);
        for (std::size_t o = 0; o < s.out_dim; ++o) {
            const double go = grad[o];
            if (go == 0.0) continue;
            gb[o] += go;
            double* gw_row = gw + o * s.in_dim;
            const double* w_row = w + o * s.in_dim;
            for (std::size_t i = 0; i < s.in_dim; ++i) {
                gw_row[i] += go * x[i];
                grad_in[i] += go * w_row[i];
            }
        }
        grad = std::move(grad_in);
    }
    return grad;
}

nlohmann::json to_json(const DenseNet& net) {
    nlohmann::json j;
    std::vector<std::size_t> dims;
    std::vector<std::string> acts;
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t i = 0; i < net.num_layers(); ++i) {
        const auto& s = net.layer(i);
        if (i == 0) dims.push_back(s.in_dim);
        dims.push_back(s.out_dim);
        acts.emplace_back(to_string(s.activation));
        auto w = net.weights(i);
        auto b = net.bias(i);
        layers.push_back({{"shape", {s.out_dim, s.in_dim}},
                          {"weights", std::vector<double>(w.begin(), w.end())},
                          {"bias", std::vector<double>(b.begin(), b.end())}});
    }
    j["dims"] = dims;
    j["activations"] = acts;
    j["layers"] = std::move(layers);
    return j;
}

DenseNet dense_from_json(const nlohmann::json& j) {
    try {
        const auto dims = j.at("dims").get<std::vector<std::size_t>>();
        std::vector<Activation> acts;
        for (const auto& a : j.at("activations")) acts.push_back(activation_from_string(a.get<std::string>()));
        DenseNet net(dims, acts);
        const auto& layers = j.at("layers");
        if (layers.size() != net.num_layers()) {
            throw Error(ErrorKind::DimMismatch, "checkpoint layer count does not match header");
        }
        for (std::size_t i = 0; i < net.num_layers(); ++i) {
            const auto w = layers[i].at("weights").get<std::vector<double>>();
            const auto b = layers[i].at("bias").get<std::vector<double>>();
            auto dst_w = net.weights(i);
            auto dst_b = net.bias(i);
            if (w.size() != dst_w.size() || b.size() != dst_b.size()) {
                throw Error(ErrorKind::DimMismatch, "checkpoint layer " + std::to_string(i) +
                                                        " has the wrong number of values");
            }
            std::copy(w.begin(), w.end(), dst_w.begin());
            std::copy(b.begin(), b.end(), dst_b.begin());
        }
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("malformed network checkpoint: ") + e.what());
    }
}

double mse(std::span<const double> pred, std::span<const double> target) {
    check_same_length(pred, target, "mse");
    if (pred.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

double mae(std::span<const double> pred, std::span<const double> target) {
    check_same_length(pred, target, "mae");
    if (pred.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - target[i]);
    return acc / static_cast<double>(pred.size());
}

std::vector<double> mse_grad(std::span<const double> pred, std::span<const double> target) {
    check_same_length(pred, target, "mse_grad");
    std::vector<double> g(pred.size());
    const double scale = 2.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) g[i] = scale * (pred[i] - target[i]);
    return g;
}

void AdamState::apply(std::span<const ParamBlock> blocks) {
    if (m_.empty()) {
        for (const auto& b : blocks) {
            m_.emplace_back(b.values.size(), 0.0);
            v_.emplace_back(b.values.size(), 0.0);
        }
    }
    if (m_.size() != blocks.size()) {
        throw Error(ErrorKind::DimMismatch, "adam: block count changed between steps");
    }
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].values.size() != m_[i].size() || blocks[i].grads.size() != m_[i].size()) {
            throw Error(ErrorKind::DimMismatch, "adam: block " + std::to_string(i) + " shape mismatch");
        }
    }

    ++step_;
    const double t = static_cast<double>(step_);
    const double bc1 = 1.0 - std::pow(config_.beta1, t);
    const double bc2 = 1.0 - std::pow(config_.beta2, t);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        auto values = blocks[i].values;
        auto grads = blocks[i].grads;
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t k = 0; k < values.size(); ++k) {
            const double g = grads[k];
            m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g;
            v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g * g;
            const double m_hat = m[k] / bc1;
            const double v_hat = v[k] / bc2;
            values[k] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
        }
    }
}

void adam_step(std::span<const ParamBlock> blocks, AdamState& state) { state.apply(blocks); }

}  // namespace wdan::dense
