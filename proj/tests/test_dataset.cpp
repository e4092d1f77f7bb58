#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <random>

#include "test_support.hpp"
#include "wdan/dataset.hpp"
#include "wdan/error.hpp"
#include "wdan/wavelet.hpp"

using namespace wdan;
using namespace wdan::data;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected wdan::Error");
    return ErrorKind::IoError;
}

Series random_series(std::mt19937_64& rng, std::size_t vars, std::size_t rows) {
    Series s;
    for (std::size_t v = 0; v < vars; ++v) {
        s.names.push_back("x" + std::to_string(v));
        auto ch = test_support::random_vector(rng, rows, 1.0 + static_cast<double>(v));
        for (std::size_t t = 1; t < rows; ++t) ch[t] += ch[t - 1] * 0.9;
        s.channels.push_back(std::move(ch));
    }
    return s;
}

}  // namespace

TEST_CASE("parse_csv: benchmark layout") {
    const auto s = parse_csv(
        "date,HUFL,OT\n"
        "2016-07-01 00:00:00,5.827,30.531\n"
        "2016-07-01 01:00:00,5.693,27.787\n"
        "2016-07-01 02:00:00,-1.5e-1,27.787\n");
    REQUIRE(s.num_vars() == 2);
    CHECK(s.length() == 3);
    CHECK(s.names[1] == "OT");
    CHECK(s.channels[0][2] == -0.15);
    CHECK(s.timestamps[1] == "2016-07-01 01:00:00");
}

TEST_CASE("parse_csv: non-numeric cell reports its line") {
    try {
        parse_csv("date,a,b\n1,1.0,2.0\n2,oops,3.0\n");
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ParseError);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("parse_csv: schema and timestamp checks") {
    CsvSchema schema;
    schema.expected_vars = 3;
    CHECK(kind_of([&] { parse_csv("date,a,b\n1,1,2\n", schema); }) == ErrorKind::SchemaError);
    CHECK(kind_of([] { parse_csv("date,a\n1,1\n2\n"); }) == ErrorKind::ParseError);
    CHECK(kind_of([] { parse_csv("date,a\n2,1\n1,2\n"); }) == ErrorKind::ParseError);
    CHECK(kind_of([] { parse_csv(""); }) == ErrorKind::SchemaError);
    // slash dates that do not sort as strings still count as increasing
    CHECK(parse_csv("date,a\n1990/1/9 0:00,1\n1990/1/10 0:00,2\n").length() == 2);
}

TEST_CASE("parse_csv: gaps rejected unless forward fill is requested") {
    const std::string text = "date,a\n1,1.5\n2,\n3,nan\n4,2.0\n";
    CHECK(kind_of([&] { parse_csv(text); }) == ErrorKind::ParseError);
    CsvSchema ff;
    ff.missing = MissingPolicy::forward_fill;
    const auto s = parse_csv(text, ff);
    CHECK(s.channels[0] == std::vector<double>{1.5, 1.5, 1.5, 2.0});
}

TEST_CASE("csv write/load round trip is exact") {
    std::mt19937_64 rng(1);
    auto s = random_series(rng, 3, 40);
    for (std::size_t t = 0; t < 40; ++t) s.timestamps.push_back(std::to_string(1000 + t));
    const auto path = std::filesystem::temp_directory_path() / "wdan_test_roundtrip.csv";
    write_csv(s, path);
    const auto back = load_csv(path);
    std::filesystem::remove(path);
    CHECK(back.names == s.names);
    CHECK(back.channels == s.channels);
    CHECK(kind_of([] { load_csv("/nonexistent/wdan.csv"); }) == ErrorKind::IoError);
}

TEST_CASE("make_splits: ratio arithmetic") {
    const auto ett = make_splits(17420, SplitSpec::ett());
    CHECK(ett.train.size() == 10452);
    CHECK(ett.val.size() == 3484);
    CHECK(ett.test.size() == 3484);

    const auto small = make_splits(10, SplitSpec::standard());
    CHECK(small.train == RowRange{0, 7});
    CHECK(small.val == RowRange{7, 8});
    CHECK(small.test == RowRange{8, 10});

    CHECK(kind_of([] { make_splits(3, SplitSpec::standard(), 720); }) == ErrorKind::SeriesTooShort);
    CHECK(kind_of([] { SplitSpec::custom(0.5, 0.5, 0.5); }) == ErrorKind::InvalidConfig);
}

TEST_CASE("make_splits: chronological and exhaustive for random sizes") {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::size_t> rows(1, 50000);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const double a = u(rng), b = u(rng) * (1 - a);
        const auto spec = SplitSpec::custom(a, b, 1 - a - b);
        const std::size_t n = rows(rng);
        const auto s = make_splits(n, spec);
        CHECK(s.train.begin == 0);
        CHECK(s.train.end == s.val.begin);
        CHECK(s.val.end == s.test.begin);
        CHECK(s.test.end == n);
    }
}

TEST_CASE("zscore: training rows standardized, test rows untouched by refit") {
    std::mt19937_64 rng(3);
    const auto s = random_series(rng, 4, 500);
    const auto splits = make_splits(500, SplitSpec::standard());
    const auto z = zscore_fit_transform(s, splits.train);
    for (std::size_t v = 0; v < 4; ++v) {
        const auto& ch = z.series.channels[v];
        std::span<const double> train(ch.data(), splits.train.end);
        double mean = 0;
        for (double x : train) mean += x;
        mean /= static_cast<double>(train.size());
        CHECK(std::abs(mean) < 1e-8);
        CHECK(std::abs(std::sqrt(test_support::variance(train)) - 1.0) < 1e-8);
        CHECK_FALSE(z.degenerate[v]);
        // inverse transform recovers the raw series
        for (std::size_t t = 0; t < 500; ++t) {
            CHECK(std::abs(ch[t] * z.std[v] + z.mean[v] - s.channels[v][t]) < 1e-9);
        }
    }
}

TEST_CASE("zscore: mutating test rows leaves fitted statistics bitwise unchanged") {
    std::mt19937_64 rng(4);
    const auto s = random_series(rng, 3, 400);
    const auto splits = make_splits(400, SplitSpec::ett());
    const auto base = zscore_fit_transform(s, splits.train);
    std::uniform_int_distribution<std::size_t> row(splits.val.begin, 399);
    for (int trial = 0; trial < 50; ++trial) {
        auto mutated = s;
        for (int k = 0; k < 10; ++k) mutated.channels[trial % 3][row(rng)] += 1e3 * (k + 1);
        const auto z = zscore_fit_transform(mutated, splits.train);
        CHECK(std::memcmp(z.mean.data(), base.mean.data(), 3 * sizeof(double)) == 0);
        CHECK(std::memcmp(z.std.data(), base.std.data(), 3 * sizeof(double)) == 0);
    }
}

TEST_CASE("zscore: constant variable is flagged, not fatal") {
    Series s;
    s.names = {"flat", "moving"};
    s.channels = {std::vector<double>(20, 3.0), std::vector<double>(20)};
    for (int t = 0; t < 20; ++t) s.channels[1][t] = t;
    const auto z = zscore_fit_transform(s, {0, 14});
    CHECK(z.degenerate[0]);
    CHECK_FALSE(z.degenerate[1]);
    CHECK(z.std[0] == 1e-8);
    CHECK(z.series.channels[0][5] == 0.0);
    CHECK(kind_of([&] { zscore_fit_transform(s, {0, 0}); }) == ErrorKind::NoData);
}

TEST_CASE("window_origins: counting") {
    WindowSpec spec{.input_length = 24, .horizon = 8};
    CHECK(window_origins({100, 132}, spec).size() == 1);
    CHECK(window_origins({100, 141}, spec).size() == 10);
    spec.stride = 4;
    CHECK(window_origins({100, 141}, spec) == std::vector<std::size_t>{100, 104, 108});
    CHECK(kind_of([&] { window_origins({0, 31}, spec); }) == ErrorKind::SeriesTooShort);
}

TEST_CASE("windows: contiguous and inside their split for random configurations") {
    std::mt19937_64 rng(5);
    const auto s = random_series(rng, 2, 600);
    std::uniform_int_distribution<std::size_t> len(2, 40), stride(1, 7);
    std::uniform_real_distribution<double> u(0.2, 0.7);
    for (int trial = 0; trial < 60; ++trial) {
        const double a = u(rng);
        const auto splits = make_splits(600, SplitSpec::custom(a, (1 - a) / 2, (1 - a) / 2));
        WindowSpec spec{.input_length = len(rng), .horizon = len(rng), .stride = stride(rng)};
        for (const auto& range : {splits.train, splits.val, splits.test}) {
            if (range.size() < spec.input_length + spec.horizon) continue;
            WindowIterator it(s, range, spec);
            std::size_t n = 0;
            while (auto b = it.next()) {
                ++n;
                CHECK(b->origin >= range.begin);
                CHECK(b->origin + spec.input_length + spec.horizon <= range.end);
                for (std::size_t c = 0; c < 2; ++c) {
                    CHECK(b->inputs[c].back() == s.channels[c][b->origin + spec.input_length - 1]);
                    CHECK(b->targets[c].front() == s.channels[c][b->origin + spec.input_length]);
                }
            }
            CHECK(n == it.count());
            if (spec.stride == 1) CHECK(n == range.size() - spec.input_length - spec.horizon + 1);
        }
    }
}

TEST_CASE("windows: lookback mode reaches into the previous split only for inputs") {
    WindowSpec spec{.input_length = 10, .horizon = 5, .lookback_across_splits = true};
    const auto origins = window_origins({50, 70}, spec);
    REQUIRE_FALSE(origins.empty());
    CHECK(origins.front() == 40);
    CHECK(origins.back() + 15 == 70);
    CHECK(origins.size() == 20 - 5 + 1);
}

TEST_CASE("synth: deterministic under seed") {
    SynthSpec spec;
    spec.length = 800;
    spec.channels = 3;
    spec.seed = 17;
    const auto a = synth_nonstationary(spec);
    const auto b = synth_nonstationary(spec);
    CHECK(a.channels == b.channels);
    spec.seed = 18;
    CHECK(synth_nonstationary(spec).channels != a.channels);
}

TEST_CASE("synth: noiseless short-period sinusoid lives in the wavelet residual") {
    SynthSpec spec;
    spec.length = 336;
    spec.drift_scale = 0;
    spec.noise_scale = 0;
    spec.amplitude = 2.0;
    spec.period = 4.5;
    const auto s = synth_nonstationary(spec);
    const auto basis = wavelet::make_basis("coif3");
    const auto split = wavelet::split_components(wavelet::decompose(s.channels[0], basis, 2), basis);
    const double total = test_support::sum_sq(s.channels[0]);
    CHECK(test_support::sum_sq(split.residual) >= 0.95 * total);
}

TEST_CASE("synth: json round trip and validation") {
    SynthSpec spec;
    spec.period = 7.5;
    spec.seed = 99;
    const auto back = synth_from_json(to_json(spec));
    CHECK(back.period == 7.5);
    CHECK(back.seed == 99);
    CHECK(kind_of([] { synth_from_json({{"length", 0}}); }) == ErrorKind::InvalidConfig);
}
