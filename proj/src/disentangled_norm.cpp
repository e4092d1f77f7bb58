#include "wdan/disentangled_norm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "wdan/error.hpp"

namespace wdan::norm {

std::size_t NormConfig::min_length() const noexcept {
    std::size_t decomposition = 1;
    if (trend == TrendMethod::wavelet) {
        decomposition = levels < 8 * sizeof(std::size_t) ? (std::size_t{1} << levels) : SIZE_MAX;
    } else {
        decomposition = std::max<std::size_t>(ma_kernel / 2 + 1, 2);
    }
    return std::max(decomposition, window_size());
}

void validate(const NormConfig& cfg) {
    if (!(cfg.epsilon > 0.0)) throw Error(ErrorKind::InvalidConfig, "epsilon must be positive");
    if (cfg.trend == TrendMethod::wavelet) {
        if (cfg.levels == 0) throw Error(ErrorKind::InvalidConfig, "levels must be >= 1");
        try {
            wavelet::make_basis(cfg.basis);
        } catch (const Error& e) {
            throw Error(ErrorKind::InvalidConfig, e.detail());
        }
    } else if (cfg.ma_kernel == 0 || cfg.ma_kernel % 2 == 0) {
        throw Error(ErrorKind::InvalidConfig, "moving-average kernel must be odd");
    }
}

std::vector<double> moving_average(std::span<const double> x, std::size_t kernel) {
    if (x.empty()) return {};
    const long half = static_cast<long>(kernel / 2);
    const long n = static_cast<long>(x.size());
    std::vector<double> out(x.size());
    for (long t = 0; t < n; ++t) {
        double sum = 0.0;
        for (long j = -half; j <= half; ++j) {
            sum += x[static_cast<std::size_t>(std::clamp(t + j, 0L, n - 1))];
        }
        out[static_cast<std::size_t>(t)] = sum / static_cast<double>(2 * half + 1);
    }
    return out;
}

std::vector<double> sliding_std(std::span<const double> residual, std::size_t half_width) {
    const long n = static_cast<long>(residual.size());
    const long w = static_cast<long>(half_width);
    const double inv = 1.0 / static_cast<double>(2 * w + 1);
    auto at = [&](long i) { return residual[static_cast<std::size_t>(std::clamp(i, 0L, n - 1))]; };

    std::vector<double> out(residual.size());
    for (long t = 0; t < n; ++t) {
        double mean = 0.0;
        for (long j = -w; j <= w; ++j) mean += at(t + j);
        mean *= inv;
        double var = 0.0;
        for (long j = -w; j <= w; ++j) {
            const double dev = at(t + j) - mean;
            var += dev * dev;
        }
        out[static_cast<std::size_t>(t)] = std::sqrt(var * inv);
    }
    return out;
}

wavelet::ComponentSplit split_window(std::span<const double> window, const NormConfig& cfg) {
    if (cfg.trend == TrendMethod::moving_average) {
        wavelet::ComponentSplit split;
        split.trend = moving_average(window, cfg.ma_kernel);
        split.residual.resize(window.size());
        for (std::size_t t = 0; t < window.size(); ++t) {
            split.residual[t] = window[t] - split.trend[t];
        }
        return split;
    }
    const auto basis = wavelet::make_basis(cfg.basis);
    return wavelet::split_components(wavelet::decompose(window, basis, cfg.levels), basis);
}

WindowAnalysis analyze_window(std::span<const double> window, const NormConfig& cfg) {
    if (window.size() < cfg.min_length()) {
        throw Error(ErrorKind::WindowTooShort,
                    "window of length " + std::to_string(window.size()) + " is shorter than " +
                        std::to_string(cfg.min_length()));
    }
    auto split = split_window(window, cfg);

    WindowAnalysis out;
    out.stats.mean = std::move(split.trend);
    out.stats.std = sliding_std(split.residual, cfg.window_half_width);
    const double len = static_cast<double>(window.size());
    out.stats.overall_mean =
        std::accumulate(out.stats.mean.begin(), out.stats.mean.end(), 0.0) / len;
    out.stats.overall_std_mean =
        std::accumulate(out.stats.std.begin(), out.stats.std.end(), 0.0) / len;
    out.residual = std::move(split.residual);
    return out;
}

NormStats compute_stats(std::span<const double> window, const NormConfig& cfg) {
    return analyze_window(window, cfg).stats;
}

NormStats horizon_stats(std::span<const double> horizon, const NormConfig& cfg) {
    return compute_stats(horizon, cfg);
}

std::vector<double> normalize(std::span<const double> window, const NormStats& stats,
                              double epsilon) {
    if (window.size() != stats.mean.size() || window.size() != stats.std.size()) {
        throw Error(ErrorKind::LengthMismatch, "normalize: window and statistics lengths differ");
    }
    std::vector<double> out(window.size());
    for (std::size_t t = 0; t < window.size(); ++t) {
        out[t] = (window[t] - stats.mean[t]) / (stats.std[t] + epsilon);
    }
    return out;
}

std::vector<double> denormalize(std::span<const double> prediction,
                                std::span<const double> pred_mean,
                                std::span<const double> pred_std, double epsilon) {
    if (prediction.size() != pred_mean.size() || prediction.size() != pred_std.size()) {
        throw Error(ErrorKind::LengthMismatch, "denormalize: lengths differ");
    }
    std::vector<double> out(prediction.size());
    for (std::size_t t = 0; t < prediction.size(); ++t) {
        out[t] = prediction[t] * (pred_std[t] + epsilon) + pred_mean[t];
    }
    return out;
}

}  // namespace wdan::norm
