#include "wdan/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

#include "wdan/error.hpp"

namespace wdan::train {

namespace {

constexpr std::pair<Strategy, std::string_view> kStrategyNames[] = {
    {Strategy::three_stage, "three_stage"},
    {Strategy::two_stage_alt, "two_stage_alt"},
    {Strategy::two_stage_cotrain, "two_stage_cotrain"},
    {Strategy::single_stage, "single_stage"},
};

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<double> backbone_params(const model::Model& m) {
    const auto p = m.backbone().net().params();
    return {p.begin(), p.end()};
}

// Flips predictor/backbone frozen flags for the duration of a scope.
class FreezeScope {
public:
    FreezeScope(model::Model& m, bool predictor, bool backbone)
        : m_(m), pred_(m.predictor().frozen()), bb_(m.backbone().frozen()) {
        m.predictor().set_frozen(predictor);
        m.backbone().set_frozen(backbone);
    }
    ~FreezeScope() {
        m_.predictor().set_frozen(pred_);
        m_.backbone().set_frozen(bb_);
    }
    FreezeScope(const FreezeScope&) = delete;
    FreezeScope& operator=(const FreezeScope&) = delete;

private:
    model::Model& m_;
    bool pred_;
    bool bb_;
};

}  // namespace

std::string_view to_string(Strategy s) noexcept {
    for (const auto& [k, name] : kStrategyNames) {
        if (k == s) return name;
    }
    return "?";
}

Strategy strategy_from_string(std::string_view name) {
    for (const auto& [k, n] : kStrategyNames) {
        if (n == name) return k;
    }
    throw Error(ErrorKind::InvalidStrategy, "unknown training strategy '" + std::string(name) + "'");
}

void validate(const TrainConfig& cfg) {
    auto require = [](bool ok, const char* field, const char* rule) {
        if (!ok) throw Error(ErrorKind::InvalidConfig, std::string("trainer.") + field + " " + rule);
    };
    require(cfg.lr_stat > 0 && std::isfinite(cfg.lr_stat), "lr_stat", "must be positive");
    require(cfg.lr_backbone > 0 && std::isfinite(cfg.lr_backbone), "lr_backbone", "must be positive");
    require(cfg.joint_lr() >= 0 && std::isfinite(cfg.joint_lr()), "lr_joint", "must be nonnegative");
    require(cfg.batch_size > 0, "batch_size", "must be positive");
}

nlohmann::json to_json(const TrainConfig& cfg) {
    nlohmann::json j = {{"strategy", std::string(to_string(cfg.strategy))},
                        {"epochs", {cfg.epochs_stage1, cfg.epochs_stage2, cfg.epochs_stage3}},
                        {"patience", cfg.patience},
                        {"lr_stat", cfg.lr_stat},
                        {"lr_backbone", cfg.lr_backbone},
                        {"lr_joint", cfg.joint_lr()},
                        {"seed", cfg.seed},
                        {"batch_size", cfg.batch_size},
                        {"max_batches_per_epoch", cfg.max_batches_per_epoch}};
    return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    try {
        if (j.contains("strategy")) cfg.strategy = strategy_from_string(j.at("strategy").get<std::string>());
        if (j.contains("epochs")) {
            const auto& e = j.at("epochs");
            if (!e.is_array() || e.size() != 3) {
                throw Error(ErrorKind::InvalidConfig, "trainer.epochs must list three stage budgets");
            }
            cfg.epochs_stage1 = e[0].get<std::size_t>();
            cfg.epochs_stage2 = e[1].get<std::size_t>();
            cfg.epochs_stage3 = e[2].get<std::size_t>();
        }
        cfg.patience = j.value("patience", cfg.patience);
        cfg.lr_stat = j.value("lr_stat", cfg.lr_stat);
        cfg.lr_backbone = j.value("lr_backbone", cfg.lr_backbone);
        if (j.contains("lr_joint")) cfg.lr_joint = j.at("lr_joint").get<double>();
        cfg.seed = j.value("seed", cfg.seed);
        cfg.batch_size = j.value("batch_size", cfg.batch_size);
        cfg.max_batches_per_epoch = j.value("max_batches_per_epoch", cfg.max_batches_per_epoch);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("trainer: ") + e.what());
    }
    validate(cfg);
    return cfg;
}

nlohmann::json to_json(const TrainReport& r) {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : r.stages) {
        nlohmann::json curve = nlohmann::json::array();
        for (const auto& e : s.epochs) {
            curve.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val", e.val_metric}});
        }
        stages.push_back({{"name", s.name},
                          {"objective", s.objective},
                          {"skipped", s.skipped},
                          {"initial_val", s.initial_val},
                          {"best_val", s.best_val},
                          {"best_epoch", s.best_epoch},
                          {"early_stopped", s.early_stopped},
                          {"checkpoint", s.checkpoint},
                          {"epochs", std::move(curve)}});
    }
    return {{"strategy", r.strategy}, {"variant", r.variant}, {"seed", r.seed},
            {"stages", std::move(stages)}, {"val_mse", r.val_mse}, {"val_mae", r.val_mae}};
}

nlohmann::json timing_json(const TrainReport& r) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& s : r.stages) j[s.name] = s.seconds;
    return j;
}

Trainer::Trainer(model::Model& model, const data::SampleSet& train, const data::SampleSet& val,
                 const TrainConfig& cfg)
    : model_(&model),
      train_set_(&train),
      val_set_(&val),
      cfg_(cfg),
      train_pool_(model, train),
      val_pool_(model, val),
      rng_(cfg.seed ^ 0x5eed5eed5eedULL) {
    validate(cfg_);
    const auto& mc = model.config();
    for (const auto* set : {&train, &val}) {
        if (!set->empty() && (set->input_length() != mc.input_length || set->horizon() != mc.horizon)) {
            throw Error(ErrorKind::DimMismatch, "sample windows do not match the model's T/H");
        }
    }
}

double Trainer::validation_pretrain_loss() {
    if (val_pool_.size() == 0) throw Error(ErrorKind::NoData, "validation set has no windows");
    double total = 0.0;
    for (std::size_t i = 0; i < val_pool_.size(); ++i) {
        const auto& p = val_pool_.get(i);
        total += predictor::pretrain_loss(model_->predictor(), p.features, p.overall_mean, p.overall_std_mean,
                                          p.target_stats, nullptr)
                     .loss;
    }
    return total / static_cast<double>(val_pool_.size());
}

model::ForecastMetrics Trainer::validation_metrics() { return model::evaluate(*model_, val_pool_); }

double Trainer::validation(Objective o) {
    const double v = o == Objective::pretrain ? validation_pretrain_loss() : validation_metrics().mse;
    if (!std::isfinite(v)) throw Error(ErrorKind::NumericFailure, "validation metric is not finite");
    return v;
}

double Trainer::train_epoch(const EpochPlan& plan, dense::AdamState& pred_opt, dense::AdamState& bb_opt) {
    const std::size_t n = train_pool_.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng_);

    auto& m = *model_;
    const bool use_pred = plan.predictor && m.has_predictor();
    auto pred_grads = m.has_predictor() ? m.predictor().make_grads() : predictor::PredictorGrads{};
    std::vector<double> bb_grads(m.backbone().net().param_count(), 0.0);

    std::size_t batches = (n + cfg_.batch_size - 1) / cfg_.batch_size;
    if (cfg_.max_batches_per_epoch > 0) batches = std::min(batches, cfg_.max_batches_per_epoch);

    double total = 0.0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < batches; ++b) {
        const std::size_t begin = b * cfg_.batch_size;
        const std::size_t end = std::min(n, begin + cfg_.batch_size);
        if (use_pred) pred_grads.zero();
        std::fill(bb_grads.begin(), bb_grads.end(), 0.0);
        for (std::size_t k = begin; k < end; ++k) {
            const auto& p = train_pool_.get(order[k]);
            if (plan.objective == Objective::pretrain) {
                total += predictor::pretrain_loss(m.predictor(), p.features, p.overall_mean, p.overall_std_mean,
                                                  p.target_stats, &pred_grads)
                             .loss;
            } else {
                total += m.forecast_loss(p, use_pred ? &pred_grads : nullptr,
                                         plan.backbone ? std::span<double>(bb_grads) : std::span<double>())
                             .loss;
            }
        }
        seen += end - begin;
        const double scale = 1.0 / static_cast<double>(end - begin);
        if (use_pred) {
            pred_grads.scale(scale);
            const auto blocks = m.predictor().param_blocks(pred_grads);
            pred_opt.apply(blocks);
        }
        if (plan.backbone) {
            for (auto& g : bb_grads) g *= scale;
            const dense::ParamBlock block{m.backbone().net().mutable_params(), bb_grads};
            bb_opt.apply(std::span<const dense::ParamBlock>(&block, 1));
        }
    }
    const double loss = total / static_cast<double>(seen);
    if (!std::isfinite(loss)) throw Error(ErrorKind::NumericFailure, "training loss is not finite");
    if ((use_pred && !all_finite(m.predictor().flat_params())) ||
        (plan.backbone && !all_finite(m.backbone().net().params()))) {
        throw Error(ErrorKind::NumericFailure, "parameters became non-finite");
    }
    return loss;
}

StageReport Trainer::run_stage(const StagePlan& plan) {
    const auto t0 = std::chrono::steady_clock::now();
    auto& m = *model_;
    StageReport report;
    report.name = plan.name;
    report.objective = plan.val_objective == Objective::pretrain ? "pretrain_loss" : "forecast_mse";

    const bool train_pred = m.has_predictor() && !m.predictor().frozen();
    const bool train_bb = plan.val_objective == Objective::forecast && !m.backbone().frozen();
    if (!train_pred && !train_bb) {
        report.skipped = true;
        return report;
    }
    if (train_pool_.size() == 0) throw Error(ErrorKind::NoData, "training set has no windows");

    // modules outside this stage must come out bit-identical
    const auto pred_before = m.has_predictor() ? m.predictor().flat_params() : std::vector<double>{};
    const auto bb_before = backbone_params(m);

    dense::AdamState pred_opt({.lr = plan.lr_predictor});
    dense::AdamState bb_opt({.lr = plan.lr_backbone});

    report.initial_val = validation(plan.val_objective);
    report.best_val = report.initial_val;
    model::Model best = m;
    std::size_t since_best = 0;

    for (std::size_t e = 1; e <= plan.epochs; ++e) {
        EpochPlan ep;
        if (plan.alternate) {
            const bool pred_turn = train_pred && e % 2 == 1;
            ep.objective = pred_turn ? Objective::pretrain : Objective::forecast;
            ep.predictor = pred_turn;
            ep.backbone = !pred_turn && train_bb;
        } else {
            ep.objective = plan.val_objective;
            ep.predictor = train_pred;
            ep.backbone = train_bb;
        }
        EpochRecord rec;
        rec.epoch = e;
        rec.train_loss = train_epoch(ep, pred_opt, bb_opt);
        rec.val_metric = validation(plan.val_objective);
        report.epochs.push_back(rec);

        if (rec.val_metric < report.best_val) {
            report.best_val = rec.val_metric;
            report.best_epoch = e;
            best = m;
            since_best = 0;
        } else if (cfg_.patience > 0 && ++since_best >= cfg_.patience) {
            report.early_stopped = true;
            break;
        }
    }

    // restore the best-validation state (the initial one when never improved)
    const std::size_t last = report.epochs.empty() ? 0 : report.epochs.back().epoch;
    if (report.best_epoch != last) {
        const bool pf = m.predictor().frozen(), bf = m.backbone().frozen();
        m = best;
        m.predictor().set_frozen(pf);
        m.backbone().set_frozen(bf);
    }

    if (m.has_predictor() && !train_pred && !bitwise_equal(pred_before, m.predictor().flat_params())) {
        throw Error(ErrorKind::ContractViolation, "frozen predictor changed during " + plan.name);
    }
    if (!train_bb && !bitwise_equal(bb_before, backbone_params(m))) {
        throw Error(ErrorKind::ContractViolation, "frozen backbone changed during " + plan.name);
    }
    write_checkpoint(report);
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

void Trainer::write_checkpoint(StageReport& report) {
    if (cfg_.checkpoint_dir.empty()) return;
    std::filesystem::create_directories(cfg_.checkpoint_dir);
    char metric[32];
    std::snprintf(metric, sizeof(metric), "%.6g", report.best_val);
    report.checkpoint = report.name + "_" + std::to_string(report.best_epoch) + "_" + metric + ".json";
    std::ofstream out(cfg_.checkpoint_dir / report.checkpoint);
    if (!out) throw Error(ErrorKind::IoError, "cannot write checkpoint " + report.checkpoint);
    out << model_->to_json().dump() << '\n';
}

StageReport Trainer::stage1_pretrain() {
    if (model_->has_predictor() && model_->predictor().frozen()) {
        throw Error(ErrorKind::ContractViolation, "stage1 needs an unfrozen predictor");
    }
    FreezeScope scope(*model_, false, true);
    return run_stage({.name = "stage1",
                      .epochs = cfg_.epochs_stage1,
                      .val_objective = Objective::pretrain,
                      .lr_predictor = cfg_.lr_stat});
}

StageReport Trainer::stage2_backbone() {
    if (model_->has_predictor() && !model_->predictor().frozen()) {
        throw Error(ErrorKind::ContractViolation, "stage2 requires a frozen predictor");
    }
    return run_stage({.name = "stage2",
                      .epochs = cfg_.epochs_stage2,
                      .val_objective = Objective::forecast,
                      .lr_backbone = cfg_.lr_backbone});
}

StageReport Trainer::stage3_joint() {
    return run_stage({.name = "stage3",
                      .epochs = cfg_.epochs_stage3,
                      .val_objective = Objective::forecast,
                      .lr_predictor = cfg_.joint_lr(),
                      .lr_backbone = cfg_.joint_lr()});
}

TrainReport Trainer::run() {
    auto& m = *model_;
    TrainReport r;
    r.strategy = std::string(to_string(cfg_.strategy));
    r.variant = std::string(model::to_string(m.config().variant));
    r.seed = cfg_.seed;

    switch (cfg_.strategy) {
        case Strategy::three_stage: {
            r.stages.push_back(stage1_pretrain());
            {
                FreezeScope scope(m, true, false);
                r.stages.push_back(stage2_backbone());
            }
            FreezeScope scope(m, false, false);
            r.stages.push_back(stage3_joint());
            break;
        }
        case Strategy::two_stage_alt: {
            FreezeScope scope(m, false, false);
            r.stages.push_back(run_stage({.name = "alternate",
                                          .epochs = cfg_.epochs_stage1 + cfg_.epochs_stage2,
                                          .val_objective = Objective::forecast,
                                          .lr_predictor = cfg_.lr_stat,
                                          .lr_backbone = cfg_.lr_backbone,
                                          .alternate = true}));
            break;
        }
        case Strategy::two_stage_cotrain: {
            r.stages.push_back(stage1_pretrain());
            FreezeScope scope(m, false, false);
            r.stages.push_back(run_stage({.name = "cotrain",
                                          .epochs = cfg_.epochs_stage2,
                                          .val_objective = Objective::forecast,
                                          .lr_predictor = cfg_.lr_stat,
                                          .lr_backbone = cfg_.lr_backbone}));
            break;
        }
        case Strategy::single_stage: {
            FreezeScope scope(m, false, false);
            r.stages.push_back(run_stage({.name = "joint",
                                          .epochs = cfg_.epochs_stage2,
                                          .val_objective = Objective::forecast,
                                          .lr_predictor = cfg_.lr_stat,
                                          .lr_backbone = cfg_.lr_backbone}));
            break;
        }
    }
    if (val_pool_.size() > 0) {
        const auto metrics = validation_metrics();
        r.val_mse = metrics.mse;
        r.val_mae = metrics.mae;
    }
    return r;
}

TrainReport run_strategy(model::Model& model, const data::SampleSet& train, const data::SampleSet& val,
                         const TrainConfig& cfg) {
    return Trainer(model, train, val, cfg).run();
}

}  // namespace wdan::train
