#include "wdan/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "wdan/error.hpp"

namespace wdan::data {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
        s.remove_suffix(1);
    }
    return s;
}

std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

bool is_missing_token(std::string_view s) {
    s = trim(s);
    return s.empty() || s == "nan" || s == "NaN" || s == "NA" || s == "null";
}

// Numeric fields of a timestamp ("2016-07-01 00:00:00", "1990/1/1 0:00")
// compared lexicographically.
std::vector<long> timestamp_key(std::string_view ts) {
    std::vector<long> key;
    long cur = 0;
    bool in_num = false;
    for (char c : ts) {
        if (c >= '0' && c <= '9') {
            cur = cur * 10 + (c - '0');
            in_num = true;
        } else if (in_num) {
            key.push_back(cur);
            cur = 0;
            in_num = false;
        }
    }
    if (in_num) key.push_back(cur);
    return key;
}

std::string row_label(std::size_t line) { return "line " + std::to_string(line); }

}  // namespace

Series parse_csv(std::string_view text, const CsvSchema& schema) {
    Series s;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header_seen = false;
    std::vector<long> prev_key;

    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (trim(line).empty()) continue;

        const auto fields = split_fields(line);
        if (!header_seen) {
            header_seen = true;
            if (fields.size() < 2) {
                throw Error(ErrorKind::SchemaError, "header needs a timestamp column and at least one variable");
            }
            for (std::size_t i = 1; i < fields.size(); ++i) s.names.emplace_back(trim(fields[i]));
            s.channels.resize(s.names.size());
            if (schema.expected_vars && *schema.expected_vars != s.names.size()) {
                throw Error(ErrorKind::SchemaError, "expected " + std::to_string(*schema.expected_vars) +
                                                        " variables, header declares " +
                                                        std::to_string(s.names.size()));
            }
            continue;
        }
        if (fields.size() != s.names.size() + 1) {
            throw Error(ErrorKind::ParseError, row_label(line_no) + ": expected " +
                                                   std::to_string(s.names.size() + 1) + " fields, got " +
                                                   std::to_string(fields.size()));
        }
        const std::string ts(trim(fields[0]));
        auto key = timestamp_key(ts);
        if (!prev_key.empty() && !key.empty() && !(prev_key < key)) {
            throw Error(ErrorKind::ParseError, row_label(line_no) + ": timestamp '" + ts +
                                                   "' does not increase");
        }
        prev_key = std::move(key);
        s.timestamps.push_back(ts);

        for (std::size_t i = 1; i < fields.size(); ++i) {
            auto& ch = s.channels[i - 1];
            if (auto v = parse_number(fields[i])) {
                ch.push_back(*v);
                continue;
            }
            if (is_missing_token(fields[i]) && schema.missing == MissingPolicy::forward_fill && !ch.empty()) {
                ch.push_back(ch.back());
                continue;
            }
            throw Error(ErrorKind::ParseError, row_label(line_no) + ", column '" + s.names[i - 1] +
                                                   "': cannot parse '" + std::string(trim(fields[i])) + "'");
        }
    }
    if (!header_seen) throw Error(ErrorKind::SchemaError, "empty CSV");
    return s;
}

Series load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_csv(buf.str(), schema);
    } catch (const Error& e) {
        throw Error(e.kind(), path.filename().string() + ": " + e.detail());
    }
}

void write_csv(const Series& s, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path.string() + "'");
    out << "date";
    for (const auto& n : s.names) out << ',' << n;
    out << '\n';
    char buf[64];
    for (std::size_t t = 0; t < s.length(); ++t) {
        out << (s.timestamps.empty() ? std::to_string(t) : s.timestamps[t]);
        for (const auto& ch : s.channels) {
            const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), ch[t]);
            out << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
        }
        out << '\n';
    }
}

SplitSpec SplitSpec::custom(double train, double val, double test) {
    if (train < 0 || val < 0 || test < 0 || std::abs(train + val + test - 1.0) > 1e-9) {
        throw Error(ErrorKind::InvalidConfig, "split ratios must be nonnegative and sum to 1");
    }
    return {SplitScheme::custom, train, val, test};
}

Splits make_splits(std::size_t rows, const SplitSpec& spec, std::size_t min_rows) {
    const double n = static_cast<double>(rows);
    // the 1e-9 guard keeps exact products such as 17420 * 0.6 from rounding down
    const auto n_train = static_cast<std::size_t>(std::floor(n * spec.train + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(n * spec.test + 1e-9));
    const std::size_t n_val = rows - n_train - n_test;

    Splits s;
    s.train = {0, n_train};
    s.val = {n_train, n_train + n_val};
    s.test = {n_train + n_val, rows};
    if (rows == 0 || (min_rows > 0 && (s.train.size() < min_rows || s.val.size() < min_rows ||
                                       s.test.size() < min_rows))) {
        throw Error(ErrorKind::SeriesTooShort,
                    std::to_string(rows) + " rows cannot provide " + std::to_string(min_rows) +
                        " rows to each of train/val/test");
    }
    return s;
}

ZScore zscore_fit_transform(const Series& s, const RowRange& train) {
    if (train.size() == 0 || train.end > s.length()) {
        throw Error(ErrorKind::NoData, "z-score fit needs a non-empty training range");
    }
    ZScore z;
    z.series = s;
    const double count = static_cast<double>(train.size());
    for (std::size_t v = 0; v < s.num_vars(); ++v) {
        const auto& ch = s.channels[v];
        double mean = 0.0;
        for (std::size_t t = train.begin; t < train.end; ++t) mean += ch[t];
        mean /= count;
        double var = 0.0;
        for (std::size_t t = train.begin; t < train.end; ++t) var += (ch[t] - mean) * (ch[t] - mean);
        double sd = std::sqrt(var / count);
        const bool degenerate = !(sd > 1e-8);
        if (degenerate) sd = 1e-8;
        z.mean.push_back(mean);
        z.std.push_back(sd);
        z.degenerate.push_back(degenerate);
        for (auto& x : z.series.channels[v]) x = (x - mean) / sd;
    }
    return z;
}

std::vector<std::size_t> window_origins(const RowRange& range, const WindowSpec& spec) {
    if (spec.stride == 0) throw Error(ErrorKind::InvalidConfig, "window stride must be positive");
    const std::size_t first = spec.lookback_across_splits
                                  ? (range.begin >= spec.input_length ? range.begin - spec.input_length : 0)
                                  : range.begin;
    const std::size_t need = spec.input_length + spec.horizon;
    if (range.end < first + need || range.end < range.begin) {
        throw Error(ErrorKind::SeriesTooShort, "range of " + std::to_string(range.size()) +
                                                   " rows is shorter than T + H = " + std::to_string(need));
    }
    std::vector<std::size_t> out;
    for (std::size_t o = first; o + need <= range.end; o += spec.stride) {
        // in lookback mode the target must still begin inside the range
        if (o + spec.input_length < range.begin) continue;
        out.push_back(o);
    }
    return out;
}

WindowBatch window_at(const Series& s, std::size_t origin, std::size_t input_length, std::size_t horizon) {
    if (origin + input_length + horizon > s.length()) {
        throw Error(ErrorKind::SeriesTooShort, "window runs past the end of the series");
    }
    WindowBatch b;
    b.origin = origin;
    b.input_length = input_length;
    b.horizon = horizon;
    for (const auto& ch : s.channels) {
        const auto first = ch.begin() + static_cast<long>(origin);
        b.inputs.emplace_back(first, first + static_cast<long>(input_length));
        b.targets.emplace_back(first + static_cast<long>(input_length),
                               first + static_cast<long>(input_length + horizon));
    }
    return b;
}

WindowIterator::WindowIterator(const Series& s, const RowRange& range, const WindowSpec& spec)
    : series_(&s), spec_(spec), origins_(window_origins(range, spec)) {}

std::optional<WindowBatch> WindowIterator::next() {
    if (pos_ >= origins_.size()) return std::nullopt;
    return window_at(*series_, origins_[pos_++], spec_.input_length, spec_.horizon);
}

SampleSet::SampleSet(const Series& s, const RowRange& range, const WindowSpec& spec)
    : series_(&s), input_length_(spec.input_length), horizon_(spec.horizon) {
    if (range.end > s.length()) throw Error(ErrorKind::SeriesTooShort, "range runs past the end of the series");
    for (std::size_t o : window_origins(range, spec)) {
        for (std::size_t c = 0; c < s.num_vars(); ++c) refs_.push_back({o, c});
    }
}

std::span<const double> SampleSet::input(std::size_t i) const {
    const auto& r = refs_.at(i);
    return std::span<const double>(series_->channels[r.channel]).subspan(r.origin, input_length_);
}

std::span<const double> SampleSet::target(std::size_t i) const {
    const auto& r = refs_.at(i);
    return std::span<const double>(series_->channels[r.channel]).subspan(r.origin + input_length_, horizon_);
}

SynthSpec synth_from_json(const nlohmann::json& j) {
    SynthSpec s;
    s.length = j.value("length", s.length);
    s.channels = j.value("channels", s.channels);
    s.drift_scale = j.value("drift_scale", s.drift_scale);
    s.slope_scale = j.value("slope_scale", s.slope_scale);
    s.step_scale = j.value("step_scale", s.step_scale);
    s.regime_length = j.value("regime_length", s.regime_length);
    s.amplitude = j.value("amplitude", s.amplitude);
    s.period = j.value("period", s.period);
    s.noise_scale = j.value("noise_scale", s.noise_scale);
    s.vol_amplitude = j.value("vol_amplitude", s.vol_amplitude);
    s.vol_period = j.value("vol_period", s.vol_period);
    s.seed = j.value("seed", s.seed);
    if (s.length == 0 || s.channels == 0 || s.regime_length == 0 || !(s.period > 0) || !(s.vol_period > 0)) {
        throw Error(ErrorKind::InvalidConfig, "synth: length, channels, regime_length and periods must be positive");
    }
    return s;
}

nlohmann::json to_json(const SynthSpec& s) {
    return {{"length", s.length},           {"channels", s.channels},
            {"drift_scale", s.drift_scale}, {"slope_scale", s.slope_scale},
            {"step_scale", s.step_scale},
            {"regime_length", s.regime_length}, {"amplitude", s.amplitude},
            {"period", s.period},           {"noise_scale", s.noise_scale},
            {"vol_amplitude", s.vol_amplitude}, {"vol_period", s.vol_period},
            {"seed", s.seed}};
}

Series synth_nonstationary(const SynthSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

    Series s;
    for (std::size_t c = 0; c < spec.channels; ++c) {
        s.names.push_back("v" + std::to_string(c));
        const double ph = phase(rng);
        const double vol_ph = phase(rng);
        std::vector<double> y(spec.length);
        double level = 0.0;
        double slope = 0.0;
        for (std::size_t t = 0; t < spec.length; ++t) {
            if (t % spec.regime_length == 0) {
                slope = spec.slope_scale * normal(rng);
                if (t > 0 && spec.step_scale != 0.0) level += spec.step_scale * normal(rng);
            }
            if (t > 0) level += slope + spec.drift_scale * normal(rng);
            const double td = static_cast<double>(t);
            const double seasonal = spec.amplitude * std::sin(2.0 * std::numbers::pi * td / spec.period + ph);
            const double vol = spec.noise_scale *
                               std::exp(spec.vol_amplitude *
                                        std::sin(2.0 * std::numbers::pi * td / spec.vol_period + vol_ph));
            y[t] = level + seasonal + vol * normal(rng);
        }
        s.channels.push_back(std::move(y));
    }
    for (std::size_t t = 0; t < spec.length; ++t) s.timestamps.push_back(std::to_string(t));
    return s;
}

}  // namespace wdan::data
