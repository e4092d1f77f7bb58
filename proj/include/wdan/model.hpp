#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wdan/backbone.hpp"
#include "wdan/dataset.hpp"
#include "wdan/disentangled_norm.hpp"
#include "wdan/stat_predictor.hpp"

namespace wdan::model {

/// Normalization wrapped around the backbone.
///   wdan          wavelet trend, full statistics predictor
///   moving_avg    moving-average trend, full predictor
///   no_diff       wavelet trend, predictor without the differencing encoder
///   instance_norm per-window scalar mean/std reused on the forecast
///   none          raw backbone
enum class Variant { wdan, moving_avg, no_diff, instance_norm, none };

std::string_view to_string(Variant v) noexcept;
/// Throws InvalidConfig for an unknown name.
Variant variant_from_string(std::string_view name);
bool uses_predictor(Variant v) noexcept;

struct ModelConfig {
    Variant variant = Variant::wdan;
    std::size_t input_length = 0;
    std::size_t horizon = 0;
    norm::NormConfig norm;
    std::size_t predictor_hidden = 64;
    std::size_t predictor_head_layers = 2;
    backbone::BackboneKind backbone = backbone::BackboneKind::linear;
    std::size_t backbone_hidden = 128;

    /// Sub-configurations with the variant applied (trend method, predictor
    /// variant).
    norm::NormConfig effective_norm() const;
    predictor::PredictorConfig predictor_config() const;
    backbone::BackboneConfig backbone_config() const;
};

/// Throws InvalidConfig, or WindowTooShort when T or H cannot hold the
/// statistics window of a predictor variant.
void validate(const ModelConfig& cfg);

nlohmann::json to_json(const norm::NormConfig& cfg);
norm::NormConfig norm_from_json(const nlohmann::json& j);

/// Everything derived from one (input, target) channel window that does not
/// depend on trainable parameters.
struct Prepared {
    std::vector<double> input;
    std::vector<double> target;      // empty when unknown
    std::vector<double> normalized;  // backbone input
    // predictor variants
    predictor::StatFeatures features;
    double overall_mean = 0.0;
    double overall_std_mean = 0.0;
    norm::NormStats target_stats;  // filled only when a target is present
    // instance_norm
    double instance_mean = 0.0;
    double instance_scale = 1.0;  // std + epsilon
};

struct LossResult {
    double loss = 0.0;
    std::vector<double> forecast;
};

/// Normalization, statistics predictor and backbone for one channel.
class Model {
public:
    Model() = default;
    explicit Model(const ModelConfig& cfg);

    const ModelConfig& config() const noexcept { return cfg_; }
    bool has_predictor() const noexcept { return uses_predictor(cfg_.variant); }

    predictor::StatPredictor& predictor() noexcept { return predictor_; }
    const predictor::StatPredictor& predictor() const noexcept { return predictor_; }
    backbone::Forecaster& backbone() noexcept { return backbone_; }
    const backbone::Forecaster& backbone() const noexcept { return backbone_; }

    /// Xavier init everywhere except the predictor heads' output layers,
    /// which start at zero so the untrained predictor reproduces the input
    /// window's overall statistics.
    void init(std::mt19937_64& rng);

    /// Throws DimMismatch for an input of length != T or a nonempty target of
    /// length != H.
    Prepared prepare(std::span<const double> input, std::span<const double> target = {}) const;

    std::vector<double> forecast(const Prepared& p) const;
    std::vector<double> forecast(std::span<const double> input) const;

    /// l_fc = MSE(forecast, target). Gradients are accumulated into
    /// `predictor_grads` (if non-null) and `backbone_grads` (if nonempty).
    LossResult forecast_loss(const Prepared& p, predictor::PredictorGrads* predictor_grads,
                             std::span<double> backbone_grads) const;

    nlohmann::json to_json() const;
    static Model from_json(const nlohmann::json& j);

private:
    ModelConfig cfg_;
    norm::NormConfig norm_;
    predictor::StatPredictor predictor_;
    backbone::Forecaster backbone_;
};

/// Prepared samples of a SampleSet. Preparation depends only on the model
/// configuration, so results are cached when they fit in `cache_bytes`;
/// otherwise each get() recomputes into a scratch slot (valid until the next
/// call). Not thread-safe.
class PreparedPool {
public:
    PreparedPool(const Model& model, const data::SampleSet& set,
                 std::size_t cache_bytes = std::size_t{1} << 30);

    std::size_t size() const noexcept { return set_->size(); }
    bool cached() const noexcept { return !cache_.empty() || set_->empty(); }
    const Prepared& get(std::size_t i);

private:
    const Model* model_;
    const data::SampleSet* set_;
    std::vector<Prepared> cache_;
    Prepared scratch_;
};

struct ForecastMetrics {
    double mse = 0.0;
    double mae = 0.0;
    std::size_t count = 0;  // samples (window x channel)
};

/// Mean MSE/MAE over every sample of the pool. Throws NoData when empty.
ForecastMetrics evaluate(const Model& model, PreparedPool& pool);

/// Scalar mean and population std of a window.
struct InstanceStats {
    double mean = 0.0;
    double std = 0.0;
};
InstanceStats instance_stats(std::span<const double> window);

}  // namespace wdan::model
