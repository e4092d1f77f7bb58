#include "wdan/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wdan/error.hpp"
#include "wdan/wavelet.hpp"

namespace wdan::config {

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
    throw Error(ErrorKind::InvalidConfig, field + ": " + why);
}

// Reads j[key] as T, naming the dotted field on a type error.
template <typename T>
T field(const nlohmann::json& j, const char* key, const std::string& path, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        bad(path + "." + key, "wrong type");
    }
}

const nlohmann::json& section(const nlohmann::json& j, const char* key) {
    static const nlohmann::json empty = nlohmann::json::object();
    if (!j.contains(key)) return empty;
    if (!j.at(key).is_object()) bad(key, "must be an object");
    return j.at(key);
}

data::SplitSpec parse_split(const nlohmann::json& j, const std::string& path) {
    if (!j.contains("split")) return data::SplitSpec::standard();
    const auto& s = j.at("split");
    if (s.is_string()) {
        const auto name = s.get<std::string>();
        if (name == "ett") return data::SplitSpec::ett();
        if (name == "standard") return data::SplitSpec::standard();
        bad(path + ".split", "unknown scheme '" + name + "' (ett, standard or three ratios)");
    }
    if (s.is_array() && s.size() == 3 && s[0].is_number() && s[1].is_number() && s[2].is_number()) {
        try {
            return data::SplitSpec::custom(s[0].get<double>(), s[1].get<double>(), s[2].get<double>());
        } catch (const Error&) {
            bad(path + ".split", "ratios must be nonnegative and sum to 1");
        }
    }
    bad(path + ".split", "expected 'ett', 'standard' or three ratios");
}

nlohmann::json split_json(const data::SplitSpec& s) {
    switch (s.scheme) {
        case data::SplitScheme::ett: return "ett";
        case data::SplitScheme::standard: return "standard";
        case data::SplitScheme::custom: break;
    }
    return nlohmann::json::array({s.train, s.val, s.test});
}

DatasetSpec parse_dataset(const nlohmann::json& j, const std::string& path, const std::filesystem::path& base) {
    if (!j.is_object()) bad(path, "must be an object");
    DatasetSpec d;
    d.name = field<std::string>(j, "name", path, "");
    const bool has_path = j.contains("path");
    const bool has_synth = j.contains("synth");
    if (has_path == has_synth) bad(path, "needs exactly one of 'path' or 'synth'");
    if (has_path) {
        d.path = field<std::string>(j, "path", path, "");
        if (d.path.is_relative() && !base.empty()) d.path = base / d.path;
        if (d.name.empty()) d.name = d.path.stem().string();
    } else {
        try {
            d.synth = data::synth_from_json(j.at("synth"));
        } catch (const Error& e) {
            bad(path + ".synth", e.detail());
        } catch (const nlohmann::json::exception&) {
            bad(path + ".synth", "wrong type");
        }
        if (d.name.empty()) d.name = "synth";
    }
    d.split = parse_split(j, path);
    d.lookback_across_splits = field<bool>(j, "lookback_across_splits", path, false);
    return d;
}

nlohmann::json dataset_json(const DatasetSpec& d) {
    nlohmann::json j = {{"name", d.name}, {"split", split_json(d.split)},
                        {"lookback_across_splits", d.lookback_across_splits}};
    if (d.synth) {
        j["synth"] = data::to_json(*d.synth);
    } else {
        j["path"] = d.path.string();
    }
    return j;
}

}  // namespace

model::ModelConfig ExperimentConfig::model_for(std::size_t t, std::size_t h) const {
    auto m = model;
    m.input_length = t;
    m.horizon = h;
    return m;
}

void check_lengths(const ExperimentConfig& cfg, std::size_t t) {
    const auto& n = cfg.model.norm;
    const std::size_t levels_min = n.levels < 63 ? (std::size_t{1} << n.levels) : SIZE_MAX;
    const std::size_t window = n.window_size();
    auto check = [&](std::size_t len, const std::string& name) {
        if (len < levels_min) {
            bad(name, std::to_string(len) + " is shorter than 2^K = " + std::to_string(levels_min));
        }
        if (len < window) {
            bad(name, std::to_string(len) + " is shorter than the statistics window 2w+1 = " + std::to_string(window));
        }
        if (len < n.ma_kernel / 2 + 1) {
            bad(name, std::to_string(len) + " is too short for the moving-average kernel " + std::to_string(n.ma_kernel));
        }
    };
    check(t, "window.input_length");
    for (auto h : cfg.horizons) check(h, "window.horizons");
}

ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base) {
    if (!j.is_object()) bad("config", "top level must be an object");
    ExperimentConfig c;

    if (!j.contains("dataset")) bad("dataset", "missing");
    c.dataset = parse_dataset(j.at("dataset"), "dataset", base);
    if (j.contains("datasets")) {
        if (!j.at("datasets").is_array()) bad("datasets", "must be a list");
        for (std::size_t i = 0; i < j.at("datasets").size(); ++i) {
            c.diag_datasets.push_back(parse_dataset(j.at("datasets")[i], "datasets[" + std::to_string(i) + "]", base));
        }
    } else {
        c.diag_datasets = {c.dataset};
    }

    const auto& w = section(j, "window");
    c.input_length = field<std::size_t>(w, "input_length", "window", c.input_length);
    if (w.contains("horizons")) {
        c.horizons = field<std::vector<std::size_t>>(w, "horizons", "window", {});
    } else if (w.contains("horizon")) {
        c.horizons = {field<std::size_t>(w, "horizon", "window", 96)};
    }
    c.stride = field<std::size_t>(w, "stride", "window", c.stride);
    c.eval_stride = field<std::size_t>(w, "eval_stride", "window", c.eval_stride);
    if (c.input_length == 0) bad("window.input_length", "must be positive");
    if (c.horizons.empty()) bad("window.horizons", "must list at least one horizon");
    if (c.stride == 0) bad("window.stride", "must be positive");
    if (c.eval_stride == 0) bad("window.eval_stride", "must be positive");

    auto& nc = c.model.norm;
    const auto& wv = section(j, "wavelet");
    nc.basis = field<std::string>(wv, "basis", "wavelet", nc.basis);
    nc.levels = field<std::size_t>(wv, "levels", "wavelet", nc.levels);
    const auto supported = wavelet::supported_wavelets();
    if (std::find(supported.begin(), supported.end(), nc.basis) == supported.end()) {
        bad("wavelet.basis", "unsupported basis '" + nc.basis + "'");
    }
    if (nc.levels == 0) bad("wavelet.levels", "must be at least 1");

    const auto& nj = section(j, "normalization");
    nc.window_half_width = field<std::size_t>(nj, "window_half_width", "normalization", nc.window_half_width);
    nc.epsilon = field<double>(nj, "epsilon", "normalization", nc.epsilon);
    nc.ma_kernel = field<std::size_t>(nj, "ma_kernel", "normalization", nc.ma_kernel);
    if (!(nc.epsilon > 0)) bad("normalization.epsilon", "must be positive");
    if (nc.ma_kernel % 2 == 0) bad("normalization.ma_kernel", "must be odd");

    const auto& pj = section(j, "predictor");
    c.model.predictor_hidden = field<std::size_t>(pj, "hidden_dim", "predictor", c.model.predictor_hidden);
    c.model.predictor_head_layers = field<std::size_t>(pj, "head_layers", "predictor", c.model.predictor_head_layers);
    try {
        c.model.variant = model::variant_from_string(field<std::string>(pj, "variant", "predictor", "wdan"));
    } catch (const Error& e) {
        bad("predictor.variant", e.detail());
    }
    if (c.model.predictor_hidden == 0) bad("predictor.hidden_dim", "must be positive");
    if (c.model.predictor_head_layers == 0) bad("predictor.head_layers", "must be positive");

    const auto& bj = section(j, "backbone");
    try {
        c.model.backbone = backbone::backbone_from_string(field<std::string>(bj, "kind", "backbone", "linear"));
    } catch (const Error& e) {
        bad("backbone.kind", e.detail());
    }
    c.model.backbone_hidden = field<std::size_t>(bj, "hidden_dim", "backbone", c.model.backbone_hidden);
    if (c.model.backbone_hidden == 0) bad("backbone.hidden_dim", "must be positive");

    c.trainer = train::train_config_from_json(section(j, "trainer"));

    if (j.contains("variants")) {
        if (!j.at("variants").is_array() || j.at("variants").empty()) bad("variants", "must be a nonempty list");
        c.variants.clear();
        for (const auto& v : j.at("variants")) {
            if (!v.is_string()) bad("variants", "entries must be strings");
            try {
                c.variants.push_back(model::variant_from_string(v.get<std::string>()));
            } catch (const Error& e) {
                bad("variants", e.detail());
            }
        }
    }
    if (j.contains("seeds")) {
        c.seeds = field<std::vector<std::uint64_t>>(j, "seeds", "config", {});
        if (c.seeds.empty()) bad("seeds", "must list at least one seed");
    }
    c.adf_lag = field<std::size_t>(j, "adf_lag", "config", c.adf_lag);
    c.raw_scale_metrics = field<bool>(j, "raw_scale_metrics", "config", c.raw_scale_metrics);
    c.output_dir = field<std::string>(j, "output_dir", "config", c.output_dir.string());

    check_lengths(c, c.input_length);
    return c;
}

ExperimentConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot read config '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, "config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return from_json(j, path.parent_path());
}

nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json variants = nlohmann::json::array();
    for (auto v : c.variants) variants.push_back(std::string(model::to_string(v)));
    nlohmann::json diag = nlohmann::json::array();
    for (const auto& d : c.diag_datasets) diag.push_back(dataset_json(d));
    const auto& n = c.model.norm;
    return {
        {"dataset", dataset_json(c.dataset)},
        {"datasets", std::move(diag)},
        {"window",
         {{"input_length", c.input_length}, {"horizons", c.horizons}, {"stride", c.stride}, {"eval_stride", c.eval_stride}}},
        {"wavelet", {{"basis", n.basis}, {"levels", n.levels}}},
        {"normalization", {{"window_half_width", n.window_half_width}, {"epsilon", n.epsilon}, {"ma_kernel", n.ma_kernel}}},
        {"predictor",
         {{"hidden_dim", c.model.predictor_hidden},
          {"head_layers", c.model.predictor_head_layers},
          {"variant", std::string(model::to_string(c.model.variant))}}},
        {"backbone", {{"kind", std::string(backbone::to_string(c.model.backbone))}, {"hidden_dim", c.model.backbone_hidden}}},
        {"trainer", train::to_json(c.trainer)},
        {"variants", std::move(variants)},
        {"seeds", c.seeds},
        {"adf_lag", c.adf_lag},
        {"raw_scale_metrics", c.raw_scale_metrics},
    };
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string digest(const ExperimentConfig& cfg) { return fnv1a_hex(to_json(cfg).dump()); }

data::Series load_series(const DatasetSpec& spec) {
    if (spec.synth) return data::synth_nonstationary(*spec.synth);
    return data::load_csv(spec.path);
}

}  // namespace wdan::config
