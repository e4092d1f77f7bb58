#include "wdan/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>

#include "wdan/config.hpp"
#include "wdan/eval.hpp"

namespace wdan::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string checkpoint;
    std::string lengths;
};

// Data pipeline shared by the training commands: z-scored on the training
// split, chronological ranges.
struct PreparedData {
    data::Series series;
    data::ZScore zscore;
    data::Splits splits;
};

PreparedData prepare_data(const config::DatasetSpec& spec) {
    PreparedData d;
    auto raw = config::load_series(spec);
    d.splits = data::make_splits(raw.length(), spec.split);
    d.zscore = data::zscore_fit_transform(raw, d.splits.train);
    d.series = d.zscore.series;
    return d;
}

struct WindowSets {
    data::SampleSet train;
    data::SampleSet val;
    data::SampleSet test;
};

WindowSets make_sets(const PreparedData& d, const config::ExperimentConfig& cfg, std::size_t t, std::size_t h) {
    const data::WindowSpec train_spec{.input_length = t, .horizon = h, .stride = cfg.stride};
    data::WindowSpec eval_spec{.input_length = t,
                               .horizon = h,
                               .stride = cfg.eval_stride,
                               .lookback_across_splits = cfg.dataset.lookback_across_splits};
    return {data::SampleSet(d.series, d.splits.train, train_spec), data::SampleSet(d.series, d.splits.val, eval_spec),
            data::SampleSet(d.series, d.splits.test, eval_spec)};
}

fs::path output_dir(const Options& o, const config::ExperimentConfig& cfg) {
    if (!o.out.empty()) return o.out;
    if (const char* env = std::getenv("WDAN_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
    return cfg.output_dir;
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path.string() + "'");
    out << text;
}

std::string fmt(double v, const char* spec = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string model_file(std::size_t horizon) { return "model_h" + std::to_string(horizon) + ".json"; }

config::ExperimentConfig load_config(const Options& o) {
    if (o.config.empty()) throw Error(ErrorKind::InvalidConfig, "--config is required");
    try {
        auto cfg = config::load(o.config);
        if (o.seed) cfg.trainer.seed = *o.seed;
        return cfg;
    } catch (const Error& e) {
        // every config failure, including a missing file, is a config error
        throw Error(ErrorKind::InvalidConfig, e.detail());
    }
}

std::vector<std::size_t> parse_lengths(const std::string& csv) {
    std::vector<std::size_t> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            const long v = std::stol(item, &pos);
            if (pos != item.size() || v <= 0) throw std::invalid_argument(item);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw Error(ErrorKind::InvalidConfig, "--lengths: '" + item + "' is not a positive integer");
        }
    }
    if (out.empty()) throw Error(ErrorKind::InvalidConfig, "--lengths: empty list");
    return out;
}

int cmd_train(const Options& o, std::ostream& out) {
    const auto cfg = load_config(o);
    const auto dir = output_dir(o, cfg);
    const auto digest = config::digest(cfg);
    const auto d = prepare_data(cfg.dataset);

    nlohmann::json runs = nlohmann::json::array();
    nlohmann::json timing = nlohmann::json::object();
    for (auto h : cfg.horizons) {
        const auto sets = make_sets(d, cfg, cfg.input_length, h);
        model::Model m(cfg.model_for(cfg.input_length, h));
        std::mt19937_64 rng(cfg.trainer.seed);
        m.init(rng);
        auto tc = cfg.trainer;
        tc.checkpoint_dir = dir / "checkpoints" / ("h" + std::to_string(h));
        const auto report = train::run_strategy(m, sets.train, sets.val, tc);

        auto j = train::to_json(report);
        j["horizon"] = h;
        runs.push_back(j);
        timing["h" + std::to_string(h)] = train::timing_json(report);

        nlohmann::json ckpt = {{"config_digest", digest}, {"seed", cfg.trainer.seed}, {"model", m.to_json()}};
        write_file(dir / model_file(h), ckpt.dump() + "\n");
        out << "H=" << h << "  val MSE " << fmt(report.val_mse) << "  val MAE " << fmt(report.val_mae) << '\n';
    }
    const nlohmann::json report = {{"config_digest", digest}, {"seed", cfg.trainer.seed}, {"runs", std::move(runs)}};
    write_file(dir / "report.json", report.dump(2) + "\n");
    write_file(dir / "timing.json", timing.dump(2) + "\n");
    out << "wrote " << (dir / "report.json").string() << '\n';
    return kExitOk;
}

// Fields of the model header that must agree between config and checkpoint.
void check_checkpoint_dims(const model::ModelConfig& want, const model::ModelConfig& got, const fs::path& file) {
    auto fail = [&](const std::string& what) {
        throw Error(ErrorKind::DimMismatch, file.filename().string() + ": checkpoint " + what + " differs from config");
    };
    if (want.input_length != got.input_length) fail("input_length");
    if (want.horizon != got.horizon) fail("horizon");
    if (want.variant != got.variant) fail("variant");
    if (want.backbone != got.backbone) fail("backbone kind");
    if (want.backbone != backbone::BackboneKind::linear && want.backbone_hidden != got.backbone_hidden) {
        fail("backbone hidden_dim");
    }
    if (model::uses_predictor(want.variant)) {
        if (want.predictor_hidden != got.predictor_hidden) fail("predictor hidden_dim");
        if (want.predictor_head_layers != got.predictor_head_layers) fail("predictor head_layers");
        const auto &a = want.norm, &b = got.norm;
        if (a.basis != b.basis || a.levels != b.levels || a.window_half_width != b.window_half_width ||
            a.epsilon != b.epsilon || a.ma_kernel != b.ma_kernel) {
            fail("normalization");
        }
    }
}

int cmd_evaluate(const Options& o, std::ostream& out) {
    const auto cfg = load_config(o);
    if (o.checkpoint.empty()) throw Error(ErrorKind::InvalidConfig, "--checkpoint is required");
    const fs::path ckpt_dir = o.checkpoint;
    const auto digest = config::digest(cfg);

    // validate every checkpoint before touching data
    std::vector<std::pair<model::Model, std::uint64_t>> models;
    for (auto h : cfg.horizons) {
        const auto file = ckpt_dir / model_file(h);
        std::ifstream in(file);
        if (!in) throw Error(ErrorKind::IoError, "missing checkpoint '" + file.string() + "'");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::ParseError, file.string() + ": " + e.what());
        }
        if (!j.contains("model")) throw Error(ErrorKind::ParseError, file.string() + ": no model block");
        auto m = model::Model::from_json(j.at("model"));
        check_checkpoint_dims(cfg.model_for(cfg.input_length, h), m.config(), file);
        models.emplace_back(std::move(m), j.value("seed", std::uint64_t{0}));
    }

    const auto d = prepare_data(cfg.dataset);
    eval::MetricsReport report;
    report.config_digest = digest;
    for (std::size_t i = 0; i < cfg.horizons.size(); ++i) {
        const auto h = cfg.horizons[i];
        const auto sets = make_sets(d, cfg, cfg.input_length, h);
        const auto& [m, seed] = models[i];
        const auto metrics = eval::evaluate(m, sets.test, cfg.raw_scale_metrics
                                                              ? std::span<const double>(d.zscore.std)
                                                              : std::span<const double>());
        eval::MetricsRow row;
        row.dataset = cfg.dataset.name;
        row.horizon = h;
        row.variant = std::string(model::to_string(m.config().variant));
        row.seeds = {seed};
        row.run_mse = {metrics.mse};
        row.run_mae = {metrics.mae};
        row.mse = metrics.mse;
        row.mae = metrics.mae;
        report.rows.push_back(std::move(row));
    }
    const auto dir = o.out.empty() && std::getenv("WDAN_OUTPUT_DIR") == nullptr ? ckpt_dir : output_dir(o, cfg);
    const auto table = eval::format_table(report);
    write_file(dir / "metrics.json", eval::to_json(report).dump(2) + "\n");
    write_file(dir / "table.txt", table);
    out << table;
    return kExitOk;
}

eval::Experiment make_experiment(const config::ExperimentConfig& cfg, const PreparedData& d, std::size_t t,
                                 std::size_t h) {
    eval::Experiment ex;
    ex.dataset = cfg.dataset.name;
    ex.series = &d.series;
    ex.splits = d.splits;
    ex.train_window = {.input_length = t, .horizon = h, .stride = cfg.stride};
    ex.eval_stride = cfg.eval_stride;
    ex.model = cfg.model_for(t, h);
    ex.train = cfg.trainer;
    ex.seeds = cfg.seeds;
    return ex;
}

int cmd_ablate(const Options& o, std::ostream& out) {
    auto cfg = load_config(o);
    if (o.seed) cfg.seeds = {*o.seed};
    const auto dir = output_dir(o, cfg);
    const auto d = prepare_data(cfg.dataset);
    eval::MetricsReport report;
    report.config_digest = config::digest(cfg);
    for (auto h : cfg.horizons) {
        const auto part = eval::compare_variants(make_experiment(cfg, d, cfg.input_length, h), cfg.variants);
        report.rows.insert(report.rows.end(), part.rows.begin(), part.rows.end());
    }
    const auto table = eval::format_table(report);
    write_file(dir / "metrics.json", eval::to_json(report).dump(2) + "\n");
    write_file(dir / "table.txt", table);
    out << table;
    return kExitOk;
}

int cmd_sensitivity(const Options& o, std::ostream& out) {
    const auto cfg = load_config(o);
    const auto lengths =
        o.lengths.empty() ? std::vector<std::size_t>{192, 264, 336, 528, 720, 900, 1080} : parse_lengths(o.lengths);
    for (auto t : lengths) {
        try {
            config::check_lengths(cfg, t);
        } catch (const Error& e) {
            throw Error(ErrorKind::InvalidConfig, "input length " + std::to_string(t) + " rejected: " + e.detail());
        }
    }
    const auto dir = output_dir(o, cfg);
    const auto d = prepare_data(cfg.dataset);
    const auto h = cfg.horizons.front();

    nlohmann::json rows = nlohmann::json::array();
    std::ostringstream table;
    table << "input_length      MSE      MAE\n";
    std::vector<double> xs, ys;
    for (auto t : lengths) {
        const auto sets = make_sets(d, cfg, t, h);
        model::Model m(cfg.model_for(t, h));
        std::mt19937_64 rng(cfg.trainer.seed);
        m.init(rng);
        train::run_strategy(m, sets.train, sets.val, cfg.trainer);
        const auto metrics = eval::evaluate(m, sets.test);
        rows.push_back({{"input_length", t}, {"horizon", h}, {"mse", metrics.mse}, {"mae", metrics.mae}});
        char line[96];
        std::snprintf(line, sizeof(line), "%12zu %8.4f %8.4f\n", t, metrics.mse, metrics.mae);
        table << line;
        xs.push_back(static_cast<double>(t));
        ys.push_back(metrics.mse);
    }
    const nlohmann::json j = {{"config_digest", config::digest(cfg)},
                              {"seed", cfg.trainer.seed},
                              {"variant", std::string(model::to_string(cfg.model.variant))},
                              {"rows", std::move(rows)}};
    write_file(dir / "sensitivity.json", j.dump(2) + "\n");
    write_file(dir / "table.txt", table.str());
    write_file(dir / "sensitivity.svg",
               line_chart_svg(xs, ys, "Test MSE vs input length (H=" + std::to_string(h) + ")", "input length", "MSE"));
    out << table.str();
    return kExitOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
    const auto cfg = load_config(o);
    if (!cfg.dataset.synth) throw Error(ErrorKind::InvalidConfig, "dataset.synth: synth needs a generator block");
    auto spec = *cfg.dataset.synth;
    if (o.seed) spec.seed = *o.seed;
    const auto series = data::synth_nonstationary(spec);
    const auto path = output_dir(o, cfg) / "synth.csv";
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    data::write_csv(series, path);
    out << "wrote " << series.length() << " rows x " << series.num_vars() << " variables to " << path.string() << '\n';
    return kExitOk;
}

int cmd_diag(const Options& o, std::ostream& out) {
    const auto cfg = load_config(o);
    if (cfg.diag_datasets.empty()) throw Error(ErrorKind::InvalidConfig, "datasets: empty list, nothing to diagnose");
    nlohmann::json rows = nlohmann::json::array();
    std::size_t name_w = 7;
    for (const auto& ds : cfg.diag_datasets) name_w = std::max(name_w, ds.name.size());
    std::ostringstream table;
    table << std::string("dataset") + std::string(name_w - 7, ' ') << "  variables     rows  ADF (lag " << cfg.adf_lag
          << ")\n";
    for (const auto& ds : cfg.diag_datasets) {
        const auto s = config::load_series(ds);
        const double adf = eval::adf_mean(s, cfg.adf_lag);
        rows.push_back({{"dataset", ds.name}, {"variables", s.num_vars()}, {"rows", s.length()}, {"adf", adf}});
        char line[128];
        std::snprintf(line, sizeof(line), "  %9zu %8zu  %10.4f\n", s.num_vars(), s.length(), adf);
        table << ds.name << std::string(name_w - ds.name.size(), ' ') << line;
    }
    const nlohmann::json j = {{"config_digest", config::digest(cfg)}, {"adf_lag", cfg.adf_lag}, {"rows", std::move(rows)}};
    write_file(output_dir(o, cfg) / "diag.json", j.dump(2) + "\n");
    out << table.str();
    return kExitOk;
}

}  // namespace

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidConfig:
        case ErrorKind::InvalidStrategy:
        case ErrorKind::UnsupportedWavelet:
        case ErrorKind::InvalidLevels:
        case ErrorKind::TooManyLevels:
        case ErrorKind::WindowTooShort:
        case ErrorKind::DimMismatch:
            return kExitConfig;
        case ErrorKind::IoError:
        case ErrorKind::ParseError:
        case ErrorKind::SchemaError:
        case ErrorKind::SeriesTooShort:
        case ErrorKind::NoData:
        case ErrorKind::SignalTooShort:
        case ErrorKind::SingularRegression:
            return kExitData;
        case ErrorKind::NumericFailure:
            return kExitNumeric;
        default:
            return 1;
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Wavelet-based disentangled adaptive normalization for forecasting", "wdan"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub, bool needs_out) {
        sub->add_option("--config", o.config, "experiment config (JSON)")->required();
        if (needs_out) sub->add_option("--out", o.out, "output directory");
        sub->add_option("--seed", o.seed, "override the seed");
    };
    auto* train = app.add_subcommand("train", "run the training strategy and write checkpoints + report.json");
    add_common(train, true);
    auto* evaluate = app.add_subcommand("evaluate", "score checkpoints on the test split");
    add_common(evaluate, true);
    evaluate->add_option("--checkpoint", o.checkpoint, "directory written by train")->required();
    auto* ablate = app.add_subcommand("ablate", "compare normalization variants");
    add_common(ablate, true);
    auto* sensitivity = app.add_subcommand("sensitivity", "test MSE as a function of input length");
    add_common(sensitivity, true);
    sensitivity->add_option("--lengths", o.lengths, "comma-separated input lengths");
    auto* synth = app.add_subcommand("synth", "write a synthetic non-stationary CSV");
    add_common(synth, true);
    auto* diag = app.add_subcommand("diag", "ADF statistic per dataset");
    add_common(diag, true);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "wdan: error: " << e.what() << '\n';
        return kExitConfig;
    }

    const auto* sub = app.get_subcommands().front();
    try {
        if (sub == train) return cmd_train(o, out);
        if (sub == evaluate) return cmd_evaluate(o, out);
        if (sub == ablate) return cmd_ablate(o, out);
        if (sub == sensitivity) return cmd_sensitivity(o, out);
        if (sub == synth) return cmd_synth(o, out);
        return cmd_diag(o, out);
    } catch (const Error& e) {
        err << "wdan " << sub->get_name() << ": error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "wdan " << sub->get_name() << ": error: " << e.what() << '\n';
        return 1;
    }
}

std::string line_chart_svg(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& title,
                           const std::string& x_label, const std::string& y_label) {
    const double w = 640, h = 400, left = 70, right = 20, top = 40, bottom = 50;
    double x0 = xs.empty() ? 0 : *std::min_element(xs.begin(), xs.end());
    double x1 = xs.empty() ? 1 : *std::max_element(xs.begin(), xs.end());
    double y0 = ys.empty() ? 0 : *std::min_element(ys.begin(), ys.end());
    double y1 = ys.empty() ? 1 : *std::max_element(ys.begin(), ys.end());
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (w - left - right); };
    auto py = [&](double y) { return top + (y1 - y) / (y1 - y0) * (h - top - bottom); };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
      << ' ' << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    s << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right << "\" y2=\"" << h - bottom
      << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << h - bottom
      << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double yv = y0 + (y1 - y0) * k / 4.0;
        s << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << fmt(yv, "%.4g")
          << "</text>\n";
    }
    for (double xv : xs) {
        s << "<text x=\"" << px(xv) << "\" y=\"" << h - bottom + 16 << "\" text-anchor=\"middle\">" << fmt(xv, "%g")
          << "</text>\n";
    }
    s << "<text x=\"" << (left + w - right) / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">" << x_label
      << "</text>\n";
    s << "<text x=\"16\" y=\"" << (top + h - bottom) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (top + h - bottom) / 2 << ")\">" << y_label << "</text>\n";
    if (!xs.empty()) {
        s << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
            s << (i ? " " : "") << px(xs[i]) << ',' << py(ys[i]);
        }
        s << "\"/>\n";
        for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
            s << "<circle cx=\"" << px(xs[i]) << "\" cy=\"" << py(ys[i]) << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
        }
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace wdan::cli
