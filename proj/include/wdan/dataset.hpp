#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace wdan::data {

/// Multivariate series stored channel-major: channels[n][t].
struct Series {
    std::vector<std::string> names;
    std::vector<std::vector<double>> channels;
    std::vector<std::string> timestamps;  // empty when absent

    std::size_t num_vars() const noexcept { return channels.size(); }
    std::size_t length() const noexcept { return channels.empty() ? 0 : channels.front().size(); }
    std::span<const double> channel(std::size_t n) const { return channels.at(n); }
};

enum class MissingPolicy { reject, forward_fill };

struct CsvSchema {
    std::optional<std::size_t> expected_vars;
    MissingPolicy missing = MissingPolicy::reject;
};

/// Reads a benchmark CSV: header row, first column a timestamp, remaining
/// columns numeric. Throws IoError, ParseError (with the 1-based file line)
/// or SchemaError.
Series load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
Series parse_csv(std::string_view text, const CsvSchema& schema = {});

void write_csv(const Series& s, const std::filesystem::path& path);

/// Half-open row interval [begin, end).
struct RowRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const noexcept { return end - begin; }
    friend bool operator==(const RowRange&, const RowRange&) = default;
};

enum class SplitScheme { ett, standard, custom };

struct SplitSpec {
    SplitScheme scheme = SplitScheme::standard;
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;

    static SplitSpec ett() { return {SplitScheme::ett, 0.6, 0.2, 0.2}; }
    static SplitSpec standard() { return {SplitScheme::standard, 0.7, 0.1, 0.2}; }
    static SplitSpec custom(double train, double val, double test);
};

struct Splits {
    RowRange train;
    RowRange val;
    RowRange test;
};

/// Chronological split: train = floor(n * r_train), test = floor(n * r_test),
/// validation takes the remainder. When `min_rows` > 0 every split must hold
/// at least that many rows, otherwise SeriesTooShort.
Splits make_splits(std::size_t rows, const SplitSpec& spec, std::size_t min_rows = 0);

struct ZScore {
    Series series;
    std::vector<double> mean;
    std::vector<double> std;
    std::vector<bool> degenerate;  // zero training variance; std floored at 1e-8
};

/// Fits per-variable mean/std on `train` rows only and applies them to all
/// rows. Throws NoData for an empty training range.
ZScore zscore_fit_transform(const Series& s, const RowRange& train);

/// One forecasting sample: every channel's input window and the horizon that
/// immediately follows it.
struct WindowBatch {
    std::size_t origin = 0;  // first input row
    std::size_t input_length = 0;
    std::size_t horizon = 0;
    std::vector<std::vector<double>> inputs;   // N x T
    std::vector<std::vector<double>> targets;  // N x H
};

struct WindowSpec {
    std::size_t input_length = 0;
    std::size_t horizon = 0;
    std::size_t stride = 1;
    /// Let input windows reach back before the range start (targets stay
    /// inside). Off by default.
    bool lookback_across_splits = false;
};

/// Input start rows of every window drawn from `range`. Throws SeriesTooShort
/// when no window fits.
std::vector<std::size_t> window_origins(const RowRange& range, const WindowSpec& spec);

WindowBatch window_at(const Series& s, std::size_t origin, std::size_t input_length,
                      std::size_t horizon);

/// Sequential access to the windows of a range.
class WindowIterator {
public:
    WindowIterator(const Series& s, const RowRange& range, const WindowSpec& spec);

    std::optional<WindowBatch> next();
    std::size_t count() const noexcept { return origins_.size(); }

private:
    const Series* series_;
    WindowSpec spec_;
    std::vector<std::size_t> origins_;
    std::size_t pos_ = 0;
};

/// Channel-independent training examples: every (window origin, channel)
/// pair of a range, viewed in place. The series must outlive the set.
struct SampleRef {
    std::size_t origin = 0;
    std::size_t channel = 0;
};

class SampleSet {
public:
    SampleSet() = default;
    SampleSet(const Series& s, const RowRange& range, const WindowSpec& spec);

    std::size_t size() const noexcept { return refs_.size(); }
    bool empty() const noexcept { return refs_.empty(); }
    std::size_t input_length() const noexcept { return input_length_; }
    std::size_t horizon() const noexcept { return horizon_; }
    const SampleRef& ref(std::size_t i) const { return refs_.at(i); }
    std::span<const double> input(std::size_t i) const;
    std::span<const double> target(std::size_t i) const;

private:
    const Series* series_ = nullptr;
    std::size_t input_length_ = 0;
    std::size_t horizon_ = 0;
    std::vector<SampleRef> refs_;
};

/// y[t] = level[t] + amplitude * sin(2 pi t / period + phase) + noise[t] where
/// level is a random walk with a piecewise-constant drift (a new slope every
/// `regime_length` steps, drawn with scale `slope_scale`) and noise has a
/// slowly oscillating log-scale. A nonzero `step_scale` also shifts the level
/// by a random jump at each regime boundary.
struct SynthSpec {
    std::size_t length = 4000;
    std::size_t channels = 1;
    double drift_scale = 0.05;   // random-walk step std
    double slope_scale = 0.0;    // std of per-regime slopes
    double step_scale = 0.0;     // std of level jumps at regime boundaries
    std::size_t regime_length = 500;
    double amplitude = 1.0;
    double period = 24.0;
    double noise_scale = 0.2;
    double vol_amplitude = 0.5;  // log-volatility oscillation amplitude
    double vol_period = 800.0;
    std::uint64_t seed = 1;
};

SynthSpec synth_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthSpec& s);

Series synth_nonstationary(const SynthSpec& spec);

}  // namespace wdan::data
