#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace wdan::dense {

enum class Activation { identity, relu, gelu };

std::string_view to_string(Activation a) noexcept;
Activation activation_from_string(std::string_view name);

/// Geometry of one affine layer inside a DenseNet's flat parameter buffer.
/// Weights are row-major (out_dim x in_dim) followed by the out_dim biases.
struct LayerShape {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Activation activation = Activation::identity;
    std::size_t offset = 0;

    std::size_t weight_count() const noexcept { return in_dim * out_dim; }
    std::size_t param_count() const noexcept { return weight_count() + out_dim; }
};

class DenseNet;

/// Activation record of a single forward pass: the input and pre-activation
/// of every layer. Bound to the network and parameter version that made it.
struct Tape {
    std::uint64_t net_id = 0;
    std::uint64_t version = 0;
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> pre_activations;
};

struct ForwardResult {
    std::vector<double> output;
    Tape tape;
};

/// Chain of affine layers, each followed by its activation. All parameters
/// live in one contiguous buffer so optimizers and checkpoints can treat a
/// network as a flat vector.
class DenseNet {
public:
    DenseNet();
    /// `dims` = {in, h1, ..., out}; `activations` has dims.size()-1 entries.
    DenseNet(const std::vector<std::size_t>& dims, const std::vector<Activation>& activations);

    DenseNet(const DenseNet& other);
    DenseNet& operator=(const DenseNet& other);
    DenseNet(DenseNet&&) noexcept = default;
    DenseNet& operator=(DenseNet&&) noexcept = default;

    /// Convenience for the common shape: `hidden_layers` layers of width
    /// `hidden_dim` with `hidden_act`, then an output layer with `output_act`.
    static DenseNet mlp(std::size_t in_dim, std::size_t hidden_dim, std::size_t out_dim,
                        std::size_t hidden_layers, Activation hidden_act,
                        Activation output_act = Activation::identity);

    std::size_t in_dim() const noexcept;
    std::size_t out_dim() const noexcept;
    std::size_t num_layers() const noexcept { return layers_.size(); }
    std::size_t param_count() const noexcept { return params_.size(); }
    const LayerShape& layer(std::size_t i) const { return layers_.at(i); }
    const std::vector<LayerShape>& layers() const noexcept { return layers_; }

    std::span<const double> params() const noexcept { return params_; }
    /// Mutable access invalidates outstanding tapes.
    std::span<double> mutable_params() noexcept;
    std::span<double> weights(std::size_t layer);
    std::span<double> bias(std::size_t layer);
    std::span<const double> weights(std::size_t layer) const;
    std::span<const double> bias(std::size_t layer) const;

    /// Uniform(+-sqrt(6 / (fan_in + fan_out))) weights, zero biases.
    void init_xavier(std::mt19937_64& rng);
    void set_zero();

    std::vector<double> forward(std::span<const double> input) const;
    ForwardResult forward_with_tape(std::span<const double> input) const;

    /// Reverse pass. Accumulates (adds) parameter gradients into
    /// `param_grad` (size param_count()) and returns d loss / d input.
    /// Throws TapeMismatch if the tape came from another network or the
    /// parameters changed since it was recorded.
    std::vector<double> backward(const Tape& tape, std::span<const double> output_grad,
                                 std::span<double> param_grad) const;

    std::uint64_t version() const noexcept { return version_; }

private:
    void check_tape(const Tape& tape) const;

    std::vector<LayerShape> layers_;
    std::vector<double> params_;
    std::uint64_t id_;
    std::uint64_t version_ = 0;
};

nlohmann::json to_json(const DenseNet& net);
DenseNet dense_from_json(const nlohmann::json& j);

double mse(std::span<const double> pred, std::span<const double> target);
double mae(std::span<const double> pred, std::span<const double> target);
/// d mse / d pred = 2 (pred - target) / n
std::vector<double> mse_grad(std::span<const double> pred, std::span<const double> target);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// A parameter buffer paired with the gradient to apply to it.
struct ParamBlock {
    std::span<double> values;
    std::span<const double> grads;
};

class AdamState {
public:
    AdamState() = default;
    explicit AdamState(AdamConfig config) : config_(config) {}

    const AdamConfig& config() const noexcept { return config_; }
    std::uint64_t step() const noexcept { return step_; }
    const std::vector<std::vector<double>>& first_moment() const noexcept { return m_; }
    const std::vector<std::vector<double>>& second_moment() const noexcept { return v_; }

    /// One bias-corrected Adam update over all blocks. Moment buffers are
    /// sized on first use; later calls must present the same block shapes.
    void apply(std::span<const ParamBlock> blocks);

private:
    AdamConfig config_;
    std::uint64_t step_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

/// Free-function form of AdamState::apply.
void adam_step(std::span<const ParamBlock> blocks, AdamState& state);

}  // namespace wdan::dense
