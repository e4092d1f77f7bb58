#include "wdan/stat_predictor.hpp"

#include <algorithm>
#include <cmath>

#include "wdan/error.hpp"

namespace wdan::predictor {

using dense::DenseNet;

StatFeatures build_features(const norm::NormStats& stats, std::span<const double> residual) {
    const std::size_t len = stats.mean.size();
    if (stats.std.size() != len || residual.size() != len) {
        throw Error(ErrorKind::LengthMismatch, "build_features: statistics and residual lengths differ");
    }
    StatFeatures f;
    f.mu_centered.resize(len);
    f.sigma_centered.resize(len);
    f.mu_diff.assign(len, 0.0);
    f.residual.assign(residual.begin(), residual.end());
    for (std::size_t t = 0; t < len; ++t) {
        f.mu_centered[t] = stats.mean[t] - stats.overall_mean;
        f.sigma_centered[t] = stats.std[t] - stats.overall_std_mean;
    }
    for (std::size_t t = 1; t < len; ++t) f.mu_diff[t] = f.mu_centered[t] - f.mu_centered[t - 1];
    return f;
}

std::string_view to_string(Variant v) noexcept {
    return v == Variant::full ? "full" : "no_diff";
}

Variant variant_from_string(std::string_view name) {
    if (name == "full") return Variant::full;
    if (name == "no_diff") return Variant::no_diff;
    throw Error(ErrorKind::InvalidConfig, "unknown predictor variant '" + std::string(name) + "'");
}

void PredictorGrads::zero() {
    for (auto& g : nets) std::fill(g.begin(), g.end(), 0.0);
}

void PredictorGrads::scale(double factor) {
    for (auto& g : nets) {
        for (double& v : g) v *= factor;
    }
}

double PredictorGrads::max_abs() const {
    double m = 0.0;
    for (const auto& g : nets) {
        for (double v : g) m = std::max(m, std::abs(v));
    }
    return m;
}

StatPredictor::StatPredictor(const PredictorConfig& cfg) : cfg_(cfg) {
    if (cfg.input_length == 0 || cfg.horizon == 0 || cfg.hidden_dim == 0 || cfg.head_layers == 0) {
        throw Error(ErrorKind::DimMismatch, "predictor dimensions must be positive");
    }
    const std::size_t t = cfg.input_length;
    const std::size_t d = cfg.hidden_dim;
    const auto enc = [&] { return DenseNet({t, d}, {cfg.encoder_activation}); };
    nets_[kMlp1] = enc();
    if (cfg.variant == Variant::full) nets_[kMlp2] = enc();
    nets_[kMlp3] = enc();
    nets_[kMlp4] = enc();
    const std::size_t mu_in = cfg.variant == Variant::full ? 3 * d : 2 * d;
    nets_[kHeadMu] = DenseNet::mlp(mu_in, d, cfg.horizon, cfg.head_layers - 1, cfg.head_activation);
    nets_[kHeadSigma] = DenseNet::mlp(3 * d, d, cfg.horizon, cfg.head_layers - 1, cfg.head_activation);
}

const DenseNet& StatPredictor::net(NetIndex i) const {
    if (!nets_[i]) throw Error(ErrorKind::ContractViolation, "predictor network is absent in this variant");
    return *nets_[i];
}

DenseNet& StatPredictor::net(NetIndex i) {
    if (!nets_[i]) throw Error(ErrorKind::ContractViolation, "predictor network is absent in this variant");
    return *nets_[i];
}

void StatPredictor::init(std::mt19937_64& rng) {
    for (auto& n : nets_) {
        if (n) n->init_xavier(rng);
    }
}

void StatPredictor::set_zero() {
    for (auto& n : nets_) {
        if (n) n->set_zero();
    }
}

PredictorGrads StatPredictor::make_grads() const {
    PredictorGrads g;
    for (std::size_t i = 0; i < kNetCount; ++i) {
        if (nets_[i]) g.nets[i].assign(nets_[i]->param_count(), 0.0);
    }
    return g;
}

void StatPredictor::check_features(const StatFeatures& f) const {
    const std::size_t t = cfg_.input_length;
    if (f.mu_centered.size() != t || f.sigma_centered.size() != t || f.mu_diff.size() != t ||
        f.residual.size() != t) {
        throw Error(ErrorKind::DimMismatch,
                    "predictor expects features of length " + std::to_string(t));
    }
}

StatPrediction StatPredictor::predict(const StatFeatures& f, double overall_mean,
                                      double overall_std_mean) const {
    return predict_traced(f, overall_mean, overall_std_mean).prediction;
}

StatPredictor::Trace StatPredictor::predict_traced(const StatFeatures& f, double overall_mean,
                                                   double overall_std_mean) const {
    check_features(f);
    Trace trace;
    auto run = [&](NetIndex i, std::span<const double> in) {
        auto r = nets_[i]->forward_with_tape(in);
        trace.tapes[i] = std::move(r.tape);
        return std::move(r.output);
    };
    const auto e1 = run(kMlp1, f.mu_centered);
    std::vector<double> e2;
    if (nets_[kMlp2]) e2 = run(kMlp2, f.mu_diff);
    const auto e3 = run(kMlp3, f.residual);
    const auto e4 = run(kMlp4, f.sigma_centered);

    std::vector<double> mu_in;
    mu_in.reserve(e1.size() + e2.size() + e3.size());
    mu_in.insert(mu_in.end(), e1.begin(), e1.end());
    mu_in.insert(mu_in.end(), e2.begin(), e2.end());
    mu_in.insert(mu_in.end(), e3.begin(), e3.end());

    std::vector<double> sigma_in;
    sigma_in.reserve(e4.size() + e1.size() + e3.size());
    sigma_in.insert(sigma_in.end(), e4.begin(), e4.end());
    sigma_in.insert(sigma_in.end(), e1.begin(), e1.end());
    sigma_in.insert(sigma_in.end(), e3.begin(), e3.end());

    auto mean = run(kHeadMu, mu_in);
    auto raw_std = run(kHeadSigma, sigma_in);
    for (double& v : mean) v += overall_mean;
    for (double& v : raw_std) v += overall_std_mean;

    trace.prediction.mean = std::move(mean);
    trace.prediction.std.resize(raw_std.size());
    for (std::size_t h = 0; h < raw_std.size(); ++h) {
        trace.prediction.std[h] = std::max(raw_std[h], 0.0);
    }
    trace.prediction.raw_std = std::move(raw_std);
    return trace;
}

void StatPredictor::backward(const Trace& trace, std::span<const double> grad_mean,
                             std::span<const double> grad_std, PredictorGrads& grads) const {
    const std::size_t h = cfg_.horizon;
    const std::size_t d = cfg_.hidden_dim;
    if (grad_mean.size() != h || grad_std.size() != h) {
        throw Error(ErrorKind::DimMismatch, "predictor backward expects gradients of length H");
    }
    std::vector<double> g_raw_std(h);
    for (std::size_t i = 0; i < h; ++i) {
        g_raw_std[i] = trace.prediction.raw_std[i] > 0.0 ? grad_std[i] : 0.0;
    }

    auto back = [&](NetIndex i, std::span<const double> g) {
        if (!trace.tapes[i]) throw Error(ErrorKind::TapeMismatch, "missing tape for predictor network");
        return nets_[i]->backward(*trace.tapes[i], g, grads.nets[i]);
    };

    const auto g_mu_in = back(kHeadMu, grad_mean);
    const auto g_sigma_in = back(kHeadSigma, g_raw_std);

    // Split concatenated input gradients back onto the encoders.
    std::vector<double> g1(d, 0.0);
    std::vector<double> g2(d, 0.0);
    std::vector<double> g3(d, 0.0);
    std::vector<double> g4(d, 0.0);
    const bool has_diff = nets_[kMlp2].has_value();
    for (std::size_t k = 0; k < d; ++k) {
        g1[k] = g_mu_in[k];
        if (has_diff) {
            g2[k] = g_mu_in[d + k];
            g3[k] = g_mu_in[2 * d + k];
        } else {
            g3[k] = g_mu_in[d + k];
        }
        g4[k] = g_sigma_in[k];
        g1[k] += g_sigma_in[d + k];
        g3[k] += g_sigma_in[2 * d + k];
    }
    back(kMlp1, g1);
    if (has_diff) back(kMlp2, g2);
    back(kMlp3, g3);
    back(kMlp4, g4);
}

std::vector<double> StatPredictor::flat_params() const {
    std::vector<double> out;
    for (const auto& n : nets_) {
        if (n) out.insert(out.end(), n->params().begin(), n->params().end());
    }
    return out;
}

std::vector<dense::ParamBlock> StatPredictor::param_blocks(const PredictorGrads& grads) {
    std::vector<dense::ParamBlock> blocks;
    for (std::size_t i = 0; i < kNetCount; ++i) {
        if (nets_[i]) blocks.push_back({nets_[i]->mutable_params(), grads.nets[i]});
    }
    return blocks;
}

namespace {
constexpr std::array<const char*, kNetCount> kNetNames = {"mlp1", "mlp2", "mlp3",
                                                          "mlp4", "head_mu", "head_sigma"};
}

nlohmann::json StatPredictor::to_json() const {
    nlohmann::json j;
    j["kind"] = "stat_predictor";
    j["variant"] = std::string(to_string(cfg_.variant));
    j["input_length"] = cfg_.input_length;
    j["horizon"] = cfg_.horizon;
    j["hidden_dim"] = cfg_.hidden_dim;
    j["head_layers"] = cfg_.head_layers;
    j["encoder_activation"] = std::string(dense::to_string(cfg_.encoder_activation));
    j["head_activation"] = std::string(dense::to_string(cfg_.head_activation));
    nlohmann::json nets = nlohmann::json::object();
    for (std::size_t i = 0; i < kNetCount; ++i) {
        if (nets_[i]) nets[kNetNames[i]] = dense::to_json(*nets_[i]);
    }
    j["networks"] = std::move(nets);
    return j;
}

StatPredictor StatPredictor::from_json(const nlohmann::json& j) {
    try {
        PredictorConfig cfg;
        cfg.variant = variant_from_string(j.at("variant").get<std::string>());
        cfg.input_length = j.at("input_length").get<std::size_t>();
        cfg.horizon = j.at("horizon").get<std::size_t>();
        cfg.hidden_dim = j.at("hidden_dim").get<std::size_t>();
        cfg.head_layers = j.at("head_layers").get<std::size_t>();
        cfg.encoder_activation = dense::activation_from_string(j.at("encoder_activation").get<std::string>());
        cfg.head_activation = dense::activation_from_string(j.at("head_activation").get<std::string>());
        StatPredictor p(cfg);
        const auto& nets = j.at("networks");
        for (std::size_t i = 0; i < kNetCount; ++i) {
            if (!p.nets_[i]) continue;
            auto loaded = dense::dense_from_json(nets.at(kNetNames[i]));
            if (loaded.param_count() != p.nets_[i]->param_count() ||
                loaded.in_dim() != p.nets_[i]->in_dim() || loaded.out_dim() != p.nets_[i]->out_dim()) {
                throw Error(ErrorKind::DimMismatch,
                            std::string("checkpoint network ") + kNetNames[i] + " has the wrong shape");
            }
            p.nets_[i] = std::move(loaded);
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("malformed predictor checkpoint: ") + e.what());
    }
}

PretrainResult pretrain_loss(const StatPredictor& p, const StatFeatures& f, double overall_mean,
                             double overall_std_mean, const norm::NormStats& target,
                             PredictorGrads* grads) {
    const std::size_t h = p.config().horizon;
    if (target.mean.size() != h || target.std.size() != h) {
        throw Error(ErrorKind::DimMismatch, "pretrain target length " +
                                                std::to_string(target.mean.size()) +
                                                " does not match predictor horizon " +
                                                std::to_string(h));
    }
    auto trace = p.predict_traced(f, overall_mean, overall_std_mean);
    PretrainResult r;
    r.mean_loss = dense::mse(trace.prediction.mean, target.mean);
    r.std_loss = dense::mse(trace.prediction.std, target.std);
    r.loss = r.mean_loss + r.std_loss;
    if (grads != nullptr) {
        p.backward(trace, dense::mse_grad(trace.prediction.mean, target.mean),
                   dense::mse_grad(trace.prediction.std, target.std), *grads);
    }
    return r;
}

}  // namespace wdan::predictor
