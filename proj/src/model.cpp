#include "wdan/model.hpp"

#include <cmath>
#include <numeric>

#include "wdan/error.hpp"

namespace wdan::model {

namespace {

constexpr std::pair<Variant, std::string_view> kVariantNames[] = {
    {Variant::wdan, "wdan"},
    {Variant::moving_avg, "moving_avg"},
    {Variant::no_diff, "no_diff"},
    {Variant::instance_norm, "instance_norm"},
    {Variant::none, "none"},
};

void check_length(std::span<const double> x, std::size_t expected, const char* what) {
    if (x.size() != expected) {
        throw Error(ErrorKind::DimMismatch, std::string(what) + " has length " + std::to_string(x.size()) +
                                                ", model expects " + std::to_string(expected));
    }
}

}  // namespace

std::string_view to_string(Variant v) noexcept {
    for (const auto& [k, name] : kVariantNames) {
        if (k == v) return name;
    }
    return "?";
}

Variant variant_from_string(std::string_view name) {
    for (const auto& [k, n] : kVariantNames) {
        if (n == name) return k;
    }
    throw Error(ErrorKind::InvalidConfig, "unknown variant '" + std::string(name) + "'");
}

bool uses_predictor(Variant v) noexcept {
    return v == Variant::wdan || v == Variant::moving_avg || v == Variant::no_diff;
}

norm::NormConfig ModelConfig::effective_norm() const {
    auto n = norm;
    n.trend = variant == Variant::moving_avg ? norm::TrendMethod::moving_average : norm::TrendMethod::wavelet;
    return n;
}

predictor::PredictorConfig ModelConfig::predictor_config() const {
    predictor::PredictorConfig p;
    p.input_length = input_length;
    p.horizon = horizon;
    p.hidden_dim = predictor_hidden;
    p.head_layers = predictor_head_layers;
    p.variant = variant == Variant::no_diff ? predictor::Variant::no_diff : predictor::Variant::full;
    return p;
}

backbone::BackboneConfig ModelConfig::backbone_config() const {
    backbone::BackboneConfig b;
    b.kind = backbone;
    b.input_length = input_length;
    b.horizon = horizon;
    b.hidden_dim = backbone_hidden;
    return b;
}

void validate(const ModelConfig& cfg) {
    if (cfg.input_length == 0 || cfg.horizon == 0) {
        throw Error(ErrorKind::InvalidConfig, "input_length and horizon must be positive");
    }
    if (cfg.predictor_hidden == 0 || cfg.predictor_head_layers == 0 || cfg.backbone_hidden == 0) {
        throw Error(ErrorKind::InvalidConfig, "network widths and depths must be positive");
    }
    const auto n = cfg.effective_norm();
    norm::validate(n);
    if (!uses_predictor(cfg.variant)) return;
    if (cfg.input_length < n.min_length()) {
        throw Error(ErrorKind::WindowTooShort, "input_length " + std::to_string(cfg.input_length) +
                                                   " is shorter than the statistics window " +
                                                   std::to_string(n.min_length()));
    }
    if (cfg.horizon < n.min_length()) {
        throw Error(ErrorKind::WindowTooShort, "horizon " + std::to_string(cfg.horizon) +
                                                   " is shorter than the statistics window " +
                                                   std::to_string(n.min_length()));
    }
}

nlohmann::json to_json(const norm::NormConfig& cfg) {
    return {{"window_half_width", cfg.window_half_width},
            {"epsilon", cfg.epsilon},
            {"basis", cfg.basis},
            {"levels", cfg.levels},
            {"ma_kernel", cfg.ma_kernel}};
}

norm::NormConfig norm_from_json(const nlohmann::json& j) {
    norm::NormConfig cfg;
    cfg.window_half_width = j.value("window_half_width", cfg.window_half_width);
    cfg.epsilon = j.value("epsilon", cfg.epsilon);
    cfg.basis = j.value("basis", cfg.basis);
    cfg.levels = j.value("levels", cfg.levels);
    cfg.ma_kernel = j.value("ma_kernel", cfg.ma_kernel);
    return cfg;
}

InstanceStats instance_stats(std::span<const double> window) {
    if (window.empty()) throw Error(ErrorKind::NoData, "instance statistics of an empty window");
    const double n = static_cast<double>(window.size());
    InstanceStats s;
    s.mean = std::accumulate(window.begin(), window.end(), 0.0) / n;
    double var = 0.0;
    for (double x : window) var += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(var / n);
    return s;
}

Model::Model(const ModelConfig& cfg) : cfg_(cfg) {
    validate(cfg_);
    norm_ = cfg_.effective_norm();
    if (has_predictor()) predictor_ = predictor::StatPredictor(cfg_.predictor_config());
    backbone_ = backbone::Forecaster(cfg_.backbone_config());
}

void Model::init(std::mt19937_64& rng) {
    backbone_.init(rng);
    if (!has_predictor()) return;
    predictor_.init(rng);
    // zero output layers: the untrained predictor returns the overall
    // statistics while hidden units stay alive for gradient flow
    for (auto head : {predictor::kHeadMu, predictor::kHeadSigma}) {
        auto& net = predictor_.net(head);
        const std::size_t last = net.num_layers() - 1;
        for (auto& w : net.weights(last)) w = 0.0;
        for (auto& b : net.bias(last)) b = 0.0;
    }
}

Prepared Model::prepare(std::span<const double> input, std::span<const double> target) const {
    check_length(input, cfg_.input_length, "input window");
    if (!target.empty()) check_length(target, cfg_.horizon, "target window");

    Prepared p;
    p.input.assign(input.begin(), input.end());
    p.target.assign(target.begin(), target.end());
    switch (cfg_.variant) {
        case Variant::none:
            p.normalized = p.input;
            break;
        case Variant::instance_norm: {
            const auto s = instance_stats(input);
            p.instance_mean = s.mean;
            p.instance_scale = s.std + norm_.epsilon;
            p.normalized.resize(input.size());
            for (std::size_t t = 0; t < input.size(); ++t) {
                p.normalized[t] = (input[t] - s.mean) / p.instance_scale;
            }
            break;
        }
        default: {
            auto analysis = norm::analyze_window(input, norm_);
            p.normalized = norm::normalize(input, analysis.stats, norm_.epsilon);
            p.features = predictor::build_features(analysis.stats, analysis.residual);
            p.overall_mean = analysis.stats.overall_mean;
            p.overall_std_mean = analysis.stats.overall_std_mean;
            if (!target.empty()) p.target_stats = norm::horizon_stats(target, norm_);
            break;
        }
    }
    return p;
}

std::vector<double> Model::forecast(const Prepared& p) const {
    auto y = backbone_.forward(p.normalized);
    if (cfg_.variant == Variant::instance_norm) {
        for (auto& v : y) v = v * p.instance_scale + p.instance_mean;
    } else if (has_predictor()) {
        const auto stats = predictor_.predict(p.features, p.overall_mean, p.overall_std_mean);
        y = norm::denormalize(y, stats.mean, stats.std, norm_.epsilon);
    }
    return y;
}

std::vector<double> Model::forecast(std::span<const double> input) const { return forecast(prepare(input)); }

LossResult Model::forecast_loss(const Prepared& p, predictor::PredictorGrads* predictor_grads,
                                std::span<double> backbone_grads) const {
    check_length(p.target, cfg_.horizon, "target window");
    const std::size_t h = cfg_.horizon;

    auto bb = backbone_.forward_with_tape(p.normalized);
    const auto& ybar = bb.output;

    LossResult r;
    std::optional<predictor::StatPredictor::Trace> trace;
    if (has_predictor()) {
        trace = predictor_.predict_traced(p.features, p.overall_mean, p.overall_std_mean);
        const auto& s = trace->prediction;
        r.forecast = norm::denormalize(ybar, s.mean, s.std, norm_.epsilon);
    } else if (cfg_.variant == Variant::instance_norm) {
        r.forecast.resize(h);
        for (std::size_t i = 0; i < h; ++i) r.forecast[i] = ybar[i] * p.instance_scale + p.instance_mean;
    } else {
        r.forecast = ybar;
    }
    r.loss = dense::mse(r.forecast, p.target);

    const bool want_backbone = !backbone_grads.empty();
    const bool want_predictor = predictor_grads != nullptr && trace.has_value();
    if (!want_backbone && !want_predictor) return r;

    const auto g = dense::mse_grad(r.forecast, p.target);
    if (want_backbone) {
        std::vector<double> dy(h);
        for (std::size_t i = 0; i < h; ++i) {
            if (trace) {
                dy[i] = g[i] * (trace->prediction.std[i] + norm_.epsilon);
            } else if (cfg_.variant == Variant::instance_norm) {
                dy[i] = g[i] * p.instance_scale;
            } else {
                dy[i] = g[i];
            }
        }
        backbone_.net().backward(bb.tape, dy, backbone_grads);
    }
    if (want_predictor) {
        std::vector<double> dstd(h);
        for (std::size_t i = 0; i < h; ++i) dstd[i] = g[i] * ybar[i];
        predictor_.backward(*trace, g, dstd, *predictor_grads);
    }
    return r;
}

nlohmann::json Model::to_json() const {
    nlohmann::json j;
    j["kind"] = "wdan_model";
    j["variant"] = std::string(to_string(cfg_.variant));
    j["input_length"] = cfg_.input_length;
    j["horizon"] = cfg_.horizon;
    j["norm"] = model::to_json(cfg_.norm);
    j["predictor_hidden"] = cfg_.predictor_hidden;
    j["predictor_head_layers"] = cfg_.predictor_head_layers;
    j["backbone_kind"] = std::string(backbone::to_string(cfg_.backbone));
    j["backbone_hidden"] = cfg_.backbone_hidden;
    if (has_predictor()) j["predictor"] = predictor_.to_json();
    j["backbone"] = backbone_.to_json();
    return j;
}

Model Model::from_json(const nlohmann::json& j) {
    try {
        ModelConfig cfg;
        cfg.variant = variant_from_string(j.at("variant").get<std::string>());
        cfg.input_length = j.at("input_length").get<std::size_t>();
        cfg.horizon = j.at("horizon").get<std::size_t>();
        cfg.norm = norm_from_json(j.at("norm"));
        cfg.predictor_hidden = j.at("predictor_hidden").get<std::size_t>();
        cfg.predictor_head_layers = j.at("predictor_head_layers").get<std::size_t>();
        cfg.backbone = backbone::backbone_from_string(j.at("backbone_kind").get<std::string>());
        cfg.backbone_hidden = j.at("backbone_hidden").get<std::size_t>();
        Model m(cfg);
        if (m.has_predictor()) m.predictor_ = predictor::StatPredictor::from_json(j.at("predictor"));
        m.backbone_ = backbone::Forecaster::from_json(j.at("backbone"));
        if (m.backbone_.input_length() != cfg.input_length || m.backbone_.horizon() != cfg.horizon) {
            throw Error(ErrorKind::DimMismatch, "backbone checkpoint dims differ from the model header");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("malformed model checkpoint: ") + e.what());
    }
}

PreparedPool::PreparedPool(const Model& model, const data::SampleSet& set, std::size_t cache_bytes)
    : model_(&model), set_(&set) {
    if (set.empty()) return;
    const auto& c = model.config();
    // inputs, normalized, four feature rows, targets, two target stat rows
    const std::size_t per_sample = sizeof(double) * (6 * c.input_length + 3 * c.horizon) + sizeof(Prepared);
    if (per_sample * set.size() > cache_bytes) return;
    cache_.reserve(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) cache_.push_back(model.prepare(set.input(i), set.target(i)));
}

const Prepared& PreparedPool::get(std::size_t i) {
    if (!cache_.empty()) return cache_.at(i);
    scratch_ = model_->prepare(set_->input(i), set_->target(i));
    return scratch_;
}

ForecastMetrics evaluate(const Model& model, PreparedPool& pool) {
    if (pool.size() == 0) throw Error(ErrorKind::NoData, "evaluation set has no windows");
    ForecastMetrics m;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto& p = pool.get(i);
        const auto y = model.forecast(p);
        m.mse += dense::mse(y, p.target);
        m.mae += dense::mae(y, p.target);
    }
    m.count = pool.size();
    m.mse /= static_cast<double>(m.count);
    m.mae /= static_cast<double>(m.count);
    return m;
}

}  // namespace wdan::model
