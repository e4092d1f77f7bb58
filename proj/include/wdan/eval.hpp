#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wdan/dataset.hpp"
#include "wdan/model.hpp"
#include "wdan/trainer.hpp"

namespace wdan::eval {

/// Mean over samples of the per-sample MSE/MAE of `forecast(i)` against
/// set.target(i). When `scales` is nonempty (one entry per channel, the
/// z-score std) errors are reported on the raw scale. Throws NoData for an
/// empty set.
model::ForecastMetrics evaluate_forecasts(const data::SampleSet& set,
                                          const std::function<std::vector<double>(std::size_t)>& forecast,
                                          std::span<const double> scales = {});

model::ForecastMetrics evaluate(const model::Model& m, const data::SampleSet& set,
                                std::span<const double> scales = {});

/// Ordinary least squares via Householder QR. `x` is n x k row-major.
struct OlsResult {
    std::vector<double> beta;
    std::vector<double> std_error;
    std::vector<double> residuals;
    double sigma2 = 0.0;  // RSS / (n - k)
};

/// Throws SingularRegression when the design is rank deficient or n <= k.
OlsResult ols(std::span<const double> x, std::size_t n, std::size_t k, std::span<const double> y);

struct AdfResult {
    double statistic = 0.0;
    std::size_t lag_order = 0;
    std::size_t n_obs = 0;  // series length - lag_order - 1
};

/// Regresses dy[t] on a constant, y[t-1] and dy[t-1..t-lag]; the statistic
/// is the y[t-1] coefficient over its standard error. Throws SeriesTooShort
/// when the series has at most lag + 2 points.
AdfResult adf_statistic(std::span<const double> series, std::size_t lag_order = 1);

/// Mean ADF statistic over the variables of a series.
double adf_mean(const data::Series& s, std::size_t lag_order = 1);

struct InstanceNormResult {
    std::vector<double> normalized;
    double mean = 0.0;
    double std = 0.0;
};

/// (x - mean) / (std + epsilon) with the window's scalar mean and population std.
InstanceNormResult instance_norm_baseline(std::span<const double> window, double epsilon = 1e-5);
std::vector<double> instance_denormalize(std::span<const double> prediction, double mean, double std,
                                         double epsilon = 1e-5);

/// Lag-1 autocorrelation of the mean-removed series.
double lag1_autocorrelation(std::span<const double> x);

struct MetricsRow {
    std::string dataset;
    std::size_t horizon = 0;
    std::string variant;
    std::vector<std::uint64_t> seeds;
    std::vector<double> run_mse;
    std::vector<double> run_mae;
    double mse = 0.0;  // mean over runs
    double mae = 0.0;
};

struct MetricsReport {
    std::string config_digest;
    std::vector<MetricsRow> rows;
};

nlohmann::json to_json(const MetricsReport& r);

/// Aligned plain-text table: one line per (dataset, horizon), one MSE/MAE
/// column pair per variant in first-seen order.
std::string format_table(const MetricsReport& r);

/// One dataset, one horizon, shared splits and windows for every variant.
struct Experiment {
    std::string dataset;
    const data::Series* series = nullptr;  // already z-scored
    data::Splits splits;
    data::WindowSpec train_window;  // stride may thin the training windows
    std::size_t eval_stride = 1;
    model::ModelConfig model;  // variant is overridden per row
    train::TrainConfig train;  // seed is overridden per run
    std::vector<std::uint64_t> seeds{1, 2, 3};
};

/// Trains and tests every requested variant once per seed. Seeds drive both
/// the model initialization and batch shuffling; data is shared.
MetricsReport compare_variants(const Experiment& ex, std::span<const model::Variant> variants);

/// Test-set metrics of a single trained model for one experiment.
MetricsRow run_variant(const Experiment& ex, model::Variant v, const data::SampleSet& train,
                       const data::SampleSet& val, const data::SampleSet& test);

}  // namespace wdan::eval
