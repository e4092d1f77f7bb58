#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "wdan/wavelet.hpp"

namespace wdan::norm {

/// How the low-frequency trend is separated from the residual. The wavelet
/// route is the method proper; moving_average is the ablation that swaps the
/// DWT for a replication-padded centred moving average.
enum class TrendMethod { wavelet, moving_average };

struct NormConfig {
    std::size_t window_half_width = 12;  // sliding window is 2w+1 = 25
    double epsilon = 1e-5;
    std::string basis = "coif3";
    std::size_t levels = 2;
    TrendMethod trend = TrendMethod::wavelet;
    std::size_t ma_kernel = 25;

    std::size_t window_size() const noexcept { return 2 * window_half_width + 1; }
    /// Smallest window length the configuration can process.
    std::size_t min_length() const noexcept;
};

/// Throws InvalidConfig for epsilon <= 0, an unknown basis, K == 0 or an even
/// moving-average kernel.
void validate(const NormConfig& cfg);

/// Point-level statistics. `mean` is the trend component itself and `std` the
/// sliding standard deviation of the residual component.
struct NormStats {
    std::vector<double> mean;
    std::vector<double> std;
    double overall_mean = 0.0;
    double overall_std_mean = 0.0;
};

/// Trend/residual split of a window under the configured method.
wavelet::ComponentSplit split_window(std::span<const double> window, const NormConfig& cfg);

/// Centred moving average with replication padding of (kernel-1)/2 samples at
/// each end; output has the input's length.
std::vector<double> moving_average(std::span<const double> x, std::size_t kernel);

/// Population standard deviation over [t-w, t+w] after repeating each endpoint
/// w times.
std::vector<double> sliding_std(std::span<const double> residual, std::size_t half_width);

/// Statistics of an input window, and the components they were derived from.
struct WindowAnalysis {
    NormStats stats;
    std::vector<double> residual;
};

WindowAnalysis analyze_window(std::span<const double> window, const NormConfig& cfg);

/// Throws WindowTooShort when the window is shorter than cfg.min_length().
NormStats compute_stats(std::span<const double> window, const NormConfig& cfg);

/// Ground-truth statistics of a horizon window, used as pretraining targets.
/// Same procedure as compute_stats applied to the horizon alone.
NormStats horizon_stats(std::span<const double> horizon, const NormConfig& cfg);

/// out[t] = (window[t] - mean[t]) / (std[t] + epsilon)
std::vector<double> normalize(std::span<const double> window, const NormStats& stats,
                              double epsilon);

/// out[t] = prediction[t] * (pred_std[t] + epsilon) + pred_mean[t]
std::vector<double> denormalize(std::span<const double> prediction,
                                std::span<const double> pred_mean,
                                std::span<const double> pred_std, double epsilon);

}  // namespace wdan::norm
