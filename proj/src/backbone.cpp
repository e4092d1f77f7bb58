#include "wdan/backbone.hpp"

#include "wdan/error.hpp"

namespace wdan::backbone {

std::string_view to_string(BackboneKind k) noexcept {
    return k == BackboneKind::linear ? "linear" : "dense";
}

BackboneKind backbone_from_string(std::string_view name) {
    if (name == "linear") return BackboneKind::linear;
    if (name == "dense") return BackboneKind::dense;
    throw Error(ErrorKind::InvalidConfig, "unknown backbone kind '" + std::string(name) + "'");
}

Forecaster::Forecaster(const BackboneConfig& cfg) : cfg_(cfg) {
    if (cfg.input_length == 0 || cfg.horizon == 0) {
        throw Error(ErrorKind::DimMismatch, "backbone needs positive T and H");
    }
    if (cfg.kind == BackboneKind::linear) {
        net_ = dense::DenseNet({cfg.input_length, cfg.horizon}, {dense::Activation::identity});
    } else {
        net_ = dense::DenseNet::mlp(cfg.input_length, cfg.hidden_dim, cfg.horizon, 1, cfg.activation);
    }
}

std::vector<double> Forecaster::forward(std::span<const double> window) const {
    if (window.size() != cfg_.input_length) {
        throw Error(ErrorKind::DimMismatch, "backbone expects windows of length " +
                                                std::to_string(cfg_.input_length) + ", got " +
                                                std::to_string(window.size()));
    }
    return net_.forward(window);
}

dense::ForwardResult Forecaster::forward_with_tape(std::span<const double> window) const {
    if (window.size() != cfg_.input_length) {
        throw Error(ErrorKind::DimMismatch, "backbone expects windows of length " +
                                                std::to_string(cfg_.input_length));
    }
    return net_.forward_with_tape(window);
}

std::vector<double> Forecaster::forecast(std::span<const double> windows, std::size_t channels) const {
    if (windows.size() != channels * cfg_.input_length) {
        throw Error(ErrorKind::DimMismatch, "forecast: batch is not N x T");
    }
    std::vector<double> out;
    out.reserve(channels * cfg_.horizon);
    for (std::size_t c = 0; c < channels; ++c) {
        auto y = forward(windows.subspan(c * cfg_.input_length, cfg_.input_length));
        out.insert(out.end(), y.begin(), y.end());
    }
    return out;
}

nlohmann::json Forecaster::to_json() const {
    nlohmann::json j;
    j["kind"] = "backbone";
    j["backbone"] = std::string(to_string(cfg_.kind));
    j["input_length"] = cfg_.input_length;
    j["horizon"] = cfg_.horizon;
    j["hidden_dim"] = cfg_.hidden_dim;
    j["activation"] = std::string(dense::to_string(cfg_.activation));
    j["network"] = dense::to_json(net_);
    return j;
}

Forecaster Forecaster::from_json(const nlohmann::json& j) {
    try {
        BackboneConfig cfg;
        cfg.kind = backbone_from_string(j.at("backbone").get<std::string>());
        cfg.input_length = j.at("input_length").get<std::size_t>();
        cfg.horizon = j.at("horizon").get<std::size_t>();
        cfg.hidden_dim = j.at("hidden_dim").get<std::size_t>();
        cfg.activation = dense::activation_from_string(j.at("activation").get<std::string>());
        Forecaster f(cfg);
        auto net = dense::dense_from_json(j.at("network"));
        if (net.param_count() != f.net_.param_count() || net.in_dim() != f.net_.in_dim() ||
            net.out_dim() != f.net_.out_dim()) {
            throw Error(ErrorKind::DimMismatch, "backbone checkpoint shape does not match its header");
        }
        f.net_ = std::move(net);
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("malformed backbone checkpoint: ") + e.what());
    }
}

}  // namespace wdan::backbone
