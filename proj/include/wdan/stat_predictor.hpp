#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "wdan/dense.hpp"
#include "wdan/disentangled_norm.hpp"

namespace wdan::predictor {

/// Residual-centred inputs of the statistics predictor.
struct StatFeatures {
    std::vector<double> mu_centered;     // mean[t] - overall_mean
    std::vector<double> sigma_centered;  // std[t] - overall_std_mean
    std::vector<double> mu_diff;         // first difference of mu_centered, mu_diff[0] = 0
    std::vector<double> residual;        // high-frequency component
};

StatFeatures build_features(const norm::NormStats& stats, std::span<const double> residual);

enum class Variant { full, no_diff };

std::string_view to_string(Variant v) noexcept;
Variant variant_from_string(std::string_view name);

struct PredictorConfig {
    std::size_t input_length = 0;  // T
    std::size_t horizon = 0;       // H
    std::size_t hidden_dim = 64;   // D
    std::size_t head_layers = 2;   // affine layers in each head
    dense::Activation encoder_activation = dense::Activation::relu;
    dense::Activation head_activation = dense::Activation::relu;
    Variant variant = Variant::full;
};

/// Indices into StatPredictor::nets().
enum NetIndex : std::size_t { kMlp1 = 0, kMlp2, kMlp3, kMlp4, kHeadMu, kHeadSigma, kNetCount };

/// Per-network gradient buffers, laid out like StatPredictor::nets(). The
/// slot of an absent network (mlp2 in the no_diff variant) stays empty.
struct PredictorGrads {
    std::array<std::vector<double>, kNetCount> nets;

    void zero();
    void scale(double factor);
    double max_abs() const;
};

struct StatPrediction {
    std::vector<double> mean;
    std::vector<double> std;      // clamped at 0
    std::vector<double> raw_std;  // before clamping
};

/// Encoders mlp1..mlp4 map R^T -> R^D (mlp1: centred mean, mlp2: its first
/// difference, mlp3: residual, mlp4: centred std). The mean head reads
/// [mlp1 | mlp2 | mlp3], the std head reads [mlp4 | mlp1 | mlp3]; mlp1 and
/// mlp3 are shared between heads. Heads predict offsets from the window's
/// overall mean statistics. The no_diff variant has no mlp2.
class StatPredictor {
public:
    StatPredictor() = default;
    explicit StatPredictor(const PredictorConfig& cfg);

    const PredictorConfig& config() const noexcept { return cfg_; }
    bool has(NetIndex i) const noexcept { return nets_[i].has_value(); }
    const dense::DenseNet& net(NetIndex i) const;
    dense::DenseNet& net(NetIndex i);

    void init(std::mt19937_64& rng);
    void set_zero();

    bool frozen() const noexcept { return frozen_; }
    void set_frozen(bool frozen) noexcept { frozen_ = frozen; }

    PredictorGrads make_grads() const;

    /// Forward pass; throws DimMismatch when feature lengths differ from T.
    StatPrediction predict(const StatFeatures& f, double overall_mean,
                           double overall_std_mean) const;

    struct Trace {
        std::array<std::optional<dense::Tape>, kNetCount> tapes;
        StatPrediction prediction;
    };
    Trace predict_traced(const StatFeatures& f, double overall_mean, double overall_std_mean) const;

    /// Backpropagates d loss / d mean and d loss / d std (with respect to the
    /// clamped std) through both heads and all encoders, accumulating into
    /// `grads`.
    void backward(const Trace& trace, std::span<const double> grad_mean,
                  std::span<const double> grad_std, PredictorGrads& grads) const;

    /// Concatenation of every network's parameters in NetIndex order.
    std::vector<double> flat_params() const;

    std::vector<dense::ParamBlock> param_blocks(const PredictorGrads& grads);

    nlohmann::json to_json() const;
    static StatPredictor from_json(const nlohmann::json& j);

private:
    void check_features(const StatFeatures& f) const;

    PredictorConfig cfg_;
    std::array<std::optional<dense::DenseNet>, kNetCount> nets_;
    bool frozen_ = false;
};

struct PretrainResult {
    double loss = 0.0;
    double mean_loss = 0.0;
    double std_loss = 0.0;
};

/// l_sp = MSE(mean, target.mean) + MSE(std, target.std). When `grads` is
/// non-null the gradient of l_sp is accumulated into it.
PretrainResult pretrain_loss(const StatPredictor& p, const StatFeatures& f, double overall_mean,
                             double overall_std_mean, const norm::NormStats& target,
                             PredictorGrads* grads);

}  // namespace wdan::predictor
