#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wdan/dataset.hpp"
#include "wdan/model.hpp"
#include "wdan/trainer.hpp"

namespace wdan::config {

/// A CSV file or a synthetic generator block, plus how to split it.
struct DatasetSpec {
    std::string name;
    std::filesystem::path path;           // CSV source when set
    std::optional<data::SynthSpec> synth;  // otherwise synthetic
    data::SplitSpec split = data::SplitSpec::standard();
    bool lookback_across_splits = false;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    std::vector<DatasetSpec> diag_datasets;  // diag only; defaults to {dataset}
    std::size_t input_length = 336;
    std::vector<std::size_t> horizons{96};
    std::size_t stride = 1;       // training windows
    std::size_t eval_stride = 1;  // validation and test windows
    model::ModelConfig model;     // input_length/horizon set per run
    train::TrainConfig trainer;
    std::vector<model::Variant> variants{model::Variant::wdan, model::Variant::moving_avg, model::Variant::no_diff,
                                         model::Variant::instance_norm, model::Variant::none};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::size_t adf_lag = 1;
    bool raw_scale_metrics = false;
    std::filesystem::path output_dir = "wdan_out";

    /// Model configuration for one (T, H) pair with the configured variant.
    model::ModelConfig model_for(std::size_t input_length, std::size_t horizon) const;
};

/// Parses and cross-checks a config document. Errors are InvalidConfig (or
/// InvalidStrategy) whose message starts with the offending field name.
/// Relative dataset paths resolve against `base_dir`.
ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
/// Throws IoError when the file is missing, ParseError for malformed JSON.
ExperimentConfig load(const std::filesystem::path& path);

/// Canonical form with every default filled in.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Checks cross-field constraints (T >= 2^K, H >= 2^K, 2w+1 <= T, ...) for
/// one input length; throws InvalidConfig naming the field.
void check_lengths(const ExperimentConfig& cfg, std::size_t input_length);

/// FNV-1a 64 of the canonical JSON, as 16 hex digits.
std::string digest(const ExperimentConfig& cfg);
std::string fnv1a_hex(std::string_view bytes);

/// Loads (or generates) a dataset.
data::Series load_series(const DatasetSpec& spec);

}  // namespace wdan::config
