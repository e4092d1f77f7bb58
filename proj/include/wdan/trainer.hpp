#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wdan/dataset.hpp"
#include "wdan/model.hpp"

namespace wdan::train {

/// three_stage        pretrain predictor, backbone with predictor frozen, joint fine-tune
/// two_stage_alt      alternate predictor (pretrain loss) and backbone epochs
/// two_stage_cotrain  pretrain predictor, then train both jointly
/// single_stage       train both jointly from the start
enum class Strategy { three_stage, two_stage_alt, two_stage_cotrain, single_stage };

std::string_view to_string(Strategy s) noexcept;
/// Throws InvalidStrategy for an unknown name.
Strategy strategy_from_string(std::string_view name);

struct TrainConfig {
    Strategy strategy = Strategy::three_stage;
    std::size_t epochs_stage1 = 50;
    std::size_t epochs_stage2 = 50;  // also the joint budget of cotrain and single_stage
    std::size_t epochs_stage3 = 20;
    std::size_t patience = 5;  // 0 disables early stopping
    double lr_stat = 1e-3;
    double lr_backbone = 1e-3;
    std::optional<double> lr_joint;  // defaults to 0.1 * lr_backbone
    std::uint64_t seed = 1;
    std::size_t batch_size = 32;
    std::size_t max_batches_per_epoch = 0;  // 0 = full pass
    std::filesystem::path checkpoint_dir;   // empty = no checkpoint files

    double joint_lr() const noexcept { return lr_joint.value_or(0.1 * lr_backbone); }
};

/// Throws InvalidConfig naming the offending field.
void validate(const TrainConfig& cfg);
nlohmann::json to_json(const TrainConfig& cfg);
/// Missing fields keep their defaults.
TrainConfig train_config_from_json(const nlohmann::json& j);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_metric = 0.0;
};

struct StageReport {
    std::string name;
    std::string objective;  // "pretrain_loss" or "forecast_mse"
    bool skipped = false;   // nothing trainable in this stage for the variant
    double initial_val = 0.0;
    std::vector<EpochRecord> epochs;
    double best_val = 0.0;       // min over the initial value and every epoch
    std::size_t best_epoch = 0;  // 0 = the initial state was never improved on
    bool early_stopped = false;
    std::string checkpoint;  // file name, empty when not written
    double seconds = 0.0;    // wall clock; kept out of to_json
};

struct TrainReport {
    std::string strategy;
    std::string variant;
    std::uint64_t seed = 0;
    std::vector<StageReport> stages;
    double val_mse = 0.0;  // final model on the validation set
    double val_mae = 0.0;
};

/// Deterministic part of the report: byte-identical across runs with the same
/// seed and configuration.
nlohmann::json to_json(const TrainReport& r);
/// Wall-clock seconds per stage.
nlohmann::json timing_json(const TrainReport& r);

/// Owns the optimization of one model. The model and sample sets must
/// outlive the trainer.
class Trainer {
public:
    Trainer(model::Model& model, const data::SampleSet& train, const data::SampleSet& val,
            const TrainConfig& cfg);

    /// Predictor on the pretraining loss. Throws ContractViolation when the
    /// predictor is frozen, NoData for an empty training set.
    StageReport stage1_pretrain();
    /// Backbone on the forecast loss. The predictor must be frozen
    /// (ContractViolation otherwise) and is verified unchanged afterwards.
    StageReport stage2_backbone();
    /// Every non-frozen module on the forecast loss at lr_joint.
    StageReport stage3_joint();

    TrainReport run();

    /// Mean pretraining loss and forecast metrics on the validation set.
    double validation_pretrain_loss();
    model::ForecastMetrics validation_metrics();

private:
    enum class Objective { pretrain, forecast };
    struct EpochPlan {
        Objective objective = Objective::forecast;
        bool predictor = false;
        bool backbone = false;
    };
    struct StagePlan {
        std::string name;
        std::size_t epochs = 0;
        Objective val_objective = Objective::forecast;
        double lr_predictor = 0.0;
        double lr_backbone = 0.0;
        bool alternate = false;  // even epochs predictor, odd epochs backbone
    };

    StageReport run_stage(const StagePlan& plan);
    double train_epoch(const EpochPlan& plan, dense::AdamState& pred_opt, dense::AdamState& bb_opt);
    double validation(Objective o);
    void write_checkpoint(StageReport& report);

    model::Model* model_;
    const data::SampleSet* train_set_;
    const data::SampleSet* val_set_;
    TrainConfig cfg_;
    model::PreparedPool train_pool_;
    model::PreparedPool val_pool_;
    std::mt19937_64 rng_;
};

TrainReport run_strategy(model::Model& model, const data::SampleSet& train, const data::SampleSet& val,
                         const TrainConfig& cfg);

}  // namespace wdan::train
