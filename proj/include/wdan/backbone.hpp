#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "wdan/dense.hpp"

namespace wdan::backbone {

enum class BackboneKind { linear, dense };

std::string_view to_string(BackboneKind k) noexcept;
BackboneKind backbone_from_string(std::string_view name);

struct BackboneConfig {
    BackboneKind kind = BackboneKind::linear;
    std::size_t input_length = 0;  // T
    std::size_t horizon = 0;       // H
    std::size_t hidden_dim = 128;  // dense kind only
    dense::Activation activation = dense::Activation::relu;
};

/// Channel-independent forecaster g: R^T -> R^H applied to every channel with
/// shared parameters. The linear kind is a single H x T affine map; the dense
/// kind has one hidden layer.
class Forecaster {
public:
    Forecaster() = default;
    explicit Forecaster(const BackboneConfig& cfg);

    const BackboneConfig& config() const noexcept { return cfg_; }
    std::size_t input_length() const noexcept { return cfg_.input_length; }
    std::size_t horizon() const noexcept { return cfg_.horizon; }

    const dense::DenseNet& net() const noexcept { return net_; }
    dense::DenseNet& net() noexcept { return net_; }

    void init(std::mt19937_64& rng) { net_.init_xavier(rng); }

    bool frozen() const noexcept { return frozen_; }
    void set_frozen(bool frozen) noexcept { frozen_ = frozen; }

    /// One channel. Throws DimMismatch for a window whose length is not T.
    std::vector<double> forward(std::span<const double> window) const;
    dense::ForwardResult forward_with_tape(std::span<const double> window) const;

    /// `windows` is N x T row-major (one channel per row); returns N x H.
    std::vector<double> forecast(std::span<const double> windows, std::size_t channels) const;

    nlohmann::json to_json() const;
    static Forecaster from_json(const nlohmann::json& j);

private:
    BackboneConfig cfg_;
    dense::DenseNet net_;
    bool frozen_ = false;
};

}  // namespace wdan::backbone
