#include "wdan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "wdan/error.hpp"

namespace wdan::eval {

model::ForecastMetrics evaluate_forecasts(const data::SampleSet& set,
                                          const std::function<std::vector<double>(std::size_t)>& forecast,
                                          std::span<const double> scales) {
    if (set.empty()) throw Error(ErrorKind::NoData, "evaluation set has no windows");
    model::ForecastMetrics m;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto y = forecast(i);
        const auto target = set.target(i);
        if (y.size() != target.size()) throw Error(ErrorKind::DimMismatch, "forecast length differs from horizon");
        const double s = scales.empty() ? 1.0 : scales[set.ref(i).channel];
        m.mse += dense::mse(y, target) * s * s;
        m.mae += dense::mae(y, target) * s;
    }
    m.count = set.size();
    m.mse /= static_cast<double>(m.count);
    m.mae /= static_cast<double>(m.count);
    return m;
}

model::ForecastMetrics evaluate(const model::Model& m, const data::SampleSet& set, std::span<const double> scales) {
    return evaluate_forecasts(
        set, [&](std::size_t i) { return m.forecast(m.prepare(set.input(i))); }, scales);
}

OlsResult ols(std::span<const double> x, std::size_t n, std::size_t k, std::span<const double> y) {
    if (x.size() != n * k || y.size() != n) throw Error(ErrorKind::DimMismatch, "OLS design/response sizes");
    if (n <= k) throw Error(ErrorKind::SingularRegression, "OLS needs more observations than regressors");

    // Householder QR on a copy; Q^T is applied to the response as we go.
    std::vector<double> a(x.begin(), x.end());
    std::vector<double> qty(y.begin(), y.end());
    double max_diag = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        double norm = 0.0;
        for (std::size_t i = j; i < n; ++i) norm += a[i * k + j] * a[i * k + j];
        norm = std::sqrt(norm);
        if (norm == 0.0) throw Error(ErrorKind::SingularRegression, "design column " + std::to_string(j) + " is zero");
        const double alpha = a[j * k + j] > 0 ? -norm : norm;
        std::vector<double> v(n - j);
        for (std::size_t i = j; i < n; ++i) v[i - j] = a[i * k + j];
        v[0] -= alpha;
        double vv = 0.0;
        for (double e : v) vv += e * e;
        if (vv > 0.0) {
            for (std::size_t c = j; c < k; ++c) {
                double d = 0.0;
                for (std::size_t i = j; i < n; ++i) d += v[i - j] * a[i * k + c];
                d = 2.0 * d / vv;
                for (std::size_t i = j; i < n; ++i) a[i * k + c] -= d * v[i - j];
            }
            double d = 0.0;
            for (std::size_t i = j; i < n; ++i) d += v[i - j] * qty[i];
            d = 2.0 * d / vv;
            for (std::size_t i = j; i < n; ++i) qty[i] -= d * v[i - j];
        }
        max_diag = std::max(max_diag, std::abs(a[j * k + j]));
    }
    for (std::size_t j = 0; j < k; ++j) {
        if (std::abs(a[j * k + j]) <= 1e-12 * max_diag) {
            throw Error(ErrorKind::SingularRegression, "design matrix is rank deficient");
        }
    }

    OlsResult r;
    r.beta.assign(k, 0.0);
    for (std::size_t j = k; j-- > 0;) {
        double s = qty[j];
        for (std::size_t c = j + 1; c < k; ++c) s -= a[j * k + c] * r.beta[c];
        r.beta[j] = s / a[j * k + j];
    }
    r.residuals.resize(n);
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t j = 0; j < k; ++j) fit += x[i * k + j] * r.beta[j];
        r.residuals[i] = y[i] - fit;
        rss += r.residuals[i] * r.residuals[i];
    }
    r.sigma2 = rss / static_cast<double>(n - k);

    // (X^T X)^-1 = R^-1 R^-T, so var(beta_j) = sigma2 * ||row j of R^-1||^2
    std::vector<double> rinv(k * k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t j = c + 1; j-- > 0;) {
            double s = j == c ? 1.0 : 0.0;
            for (std::size_t m = j + 1; m <= c; ++m) s -= a[j * k + m] * rinv[m * k + c];
            rinv[j * k + c] = s / a[j * k + j];
        }
    }
    r.std_error.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < k; ++c) s += rinv[j * k + c] * rinv[j * k + c];
        r.std_error[j] = std::sqrt(r.sigma2 * s);
    }
    return r;
}

AdfResult adf_statistic(std::span<const double> y, std::size_t lag) {
    if (y.size() <= lag + 2) {
        throw Error(ErrorKind::SeriesTooShort, "ADF with lag " + std::to_string(lag) + " needs more than " +
                                                   std::to_string(lag + 2) + " points");
    }
    const std::size_t n_obs = y.size() - lag - 1;
    const std::size_t k = 2 + lag;
    std::vector<double> x(n_obs * k);
    std::vector<double> dy(n_obs);
    for (std::size_t r = 0; r < n_obs; ++r) {
        const std::size_t t = r + lag + 1;
        dy[r] = y[t] - y[t - 1];
        x[r * k] = 1.0;
        x[r * k + 1] = y[t - 1];
        for (std::size_t l = 1; l <= lag; ++l) x[r * k + 1 + l] = y[t - l] - y[t - l - 1];
    }
    const auto fit = ols(x, n_obs, k, dy);
    if (!(fit.std_error[1] > 0.0)) throw Error(ErrorKind::SingularRegression, "ADF fit is exact");
    return {fit.beta[1] / fit.std_error[1], lag, n_obs};
}

double adf_mean(const data::Series& s, std::size_t lag) {
    if (s.num_vars() == 0) throw Error(ErrorKind::NoData, "series has no variables");
    double total = 0.0;
    for (const auto& ch : s.channels) total += adf_statistic(ch, lag).statistic;
    return total / static_cast<double>(s.num_vars());
}

InstanceNormResult instance_norm_baseline(std::span<const double> window, double epsilon) {
    const auto st = model::instance_stats(window);
    InstanceNormResult r;
    r.mean = st.mean;
    r.std = st.std;
    r.normalized.resize(window.size());
    for (std::size_t t = 0; t < window.size(); ++t) r.normalized[t] = (window[t] - st.mean) / (st.std + epsilon);
    return r;
}

std::vector<double> instance_denormalize(std::span<const double> prediction, double mean, double std,
                                         double epsilon) {
    std::vector<double> out(prediction.size());
    for (std::size_t t = 0; t < out.size(); ++t) out[t] = prediction[t] * (std + epsilon) + mean;
    return out;
}

double lag1_autocorrelation(std::span<const double> x) {
    if (x.size() < 2) throw Error(ErrorKind::NoData, "autocorrelation needs two points");
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        den += (x[t] - mean) * (x[t] - mean);
        if (t > 0) num += (x[t] - mean) * (x[t - 1] - mean);
    }
    return den > 0.0 ? num / den : 0.0;
}

nlohmann::json to_json(const MetricsReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"dataset", row.dataset},
                        {"horizon", row.horizon},
                        {"variant", row.variant},
                        {"seeds", row.seeds},
                        {"run_mse", row.run_mse},
                        {"run_mae", row.run_mae},
                        {"runs", row.run_mse.size()},
                        {"mse", row.mse},
                        {"mae", row.mae}});
    }
    return {{"config_digest", r.config_digest}, {"rows", std::move(rows)}};
}

std::string format_table(const MetricsReport& r) {
    std::vector<std::string> variants;
    std::vector<std::pair<std::string, std::size_t>> keys;
    for (const auto& row : r.rows) {
        if (std::find(variants.begin(), variants.end(), row.variant) == variants.end()) variants.push_back(row.variant);
        const std::pair key{row.dataset, row.horizon};
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
    std::size_t name_w = 7;
    for (const auto& k : keys) name_w = std::max(name_w, k.first.size());
    std::size_t col_w = 10;
    for (const auto& v : variants) col_w = std::max(col_w, v.size() + 4);

    auto pad = [](std::string s, std::size_t w, bool right) {
        if (s.size() >= w) return s;
        return right ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
    };
    std::ostringstream out;
    out << pad("dataset", name_w, false) << "  " << pad("H", 5, true);
    for (const auto& v : variants) out << "  " << pad(v + " MSE", col_w, true) << "  " << pad(v + " MAE", col_w, true);
    out << '\n';
    char buf[32];
    for (const auto& [ds, h] : keys) {
        out << pad(ds, name_w, false) << "  " << pad(std::to_string(h), 5, true);
        for (const auto& v : variants) {
            const auto it = std::find_if(r.rows.begin(), r.rows.end(), [&](const MetricsRow& row) {
                return row.dataset == ds && row.horizon == h && row.variant == v;
            });
            for (double val : {it == r.rows.end() ? NAN : it->mse, it == r.rows.end() ? NAN : it->mae}) {
                if (std::isnan(val)) {
                    out << "  " << pad("-", col_w, true);
                } else {
                    std::snprintf(buf, sizeof(buf), "%.4f", val);
                    out << "  " << pad(buf, col_w, true);
                }
            }
        }
        out << '\n';
    }
    return out.str();
}

MetricsRow run_variant(const Experiment& ex, model::Variant v, const data::SampleSet& train,
                       const data::SampleSet& val, const data::SampleSet& test) {
    MetricsRow row;
    row.dataset = ex.dataset;
    row.horizon = ex.model.horizon;
    row.variant = std::string(model::to_string(v));
    for (auto seed : ex.seeds) {
        auto mc = ex.model;
        mc.variant = v;
        model::Model m(mc);
        std::mt19937_64 rng(seed);
        m.init(rng);
        auto tc = ex.train;
        tc.seed = seed;
        train::run_strategy(m, train, val, tc);
        const auto metrics = evaluate(m, test);
        row.seeds.push_back(seed);
        row.run_mse.push_back(metrics.mse);
        row.run_mae.push_back(metrics.mae);
    }
    const double runs = static_cast<double>(row.seeds.size());
    row.mse = std::accumulate(row.run_mse.begin(), row.run_mse.end(), 0.0) / runs;
    row.mae = std::accumulate(row.run_mae.begin(), row.run_mae.end(), 0.0) / runs;
    return row;
}

MetricsReport compare_variants(const Experiment& ex, std::span<const model::Variant> variants) {
    if (ex.series == nullptr) throw Error(ErrorKind::NoData, "experiment has no series");
    if (ex.seeds.empty()) throw Error(ErrorKind::InvalidConfig, "experiment needs at least one seed");
    // one pipeline instance shared by every variant
    auto eval_window = ex.train_window;
    eval_window.stride = ex.eval_stride;
    const data::SampleSet train(*ex.series, ex.splits.train, ex.train_window);
    const data::SampleSet val(*ex.series, ex.splits.val, eval_window);
    const data::SampleSet test(*ex.series, ex.splits.test, eval_window);

    MetricsReport report;
    for (auto v : variants) report.rows.push_back(run_variant(ex, v, train, val, test));
    return report;
}

}  // namespace wdan::eval
