#include <doctest.h>

#include <stdexcept>

#include "epf/protocol.hpp"
#include "support/synthetic.hpp"

using namespace epf;

namespace {

// Small panel shaped like the real protocol: warm-up + train + validation +
// exactly 52 backtest weeks of test data.
struct Fixture {
    FeatureMatrix matrix;
    SplitSpec spec;
    SplitRows rows;
};

Fixture make_fixture(std::size_t train_hours = 24 * 90, std::size_t val_hours = 24 * 30,
                     std::size_t test_hours = 52 * 168) {
    const UtcSeconds start = utc_from_civil(2023, 1, 2);
    const std::size_t hours = 168 + train_hours + val_hours + test_hours;
    auto zone = testsupport::make_zone(ZoneId::NO3, start, hours, 5);
    Fixture f;
    f.matrix = assemble_matrix(zone.panel, testsupport::synthetic_feature_spec());
    f.spec.train_begin = start;
    f.spec.train_end = start + static_cast<std::int64_t>(168 + train_hours) * kSecondsPerHour;
    f.spec.val_begin = f.spec.train_end;
    f.spec.val_end = f.spec.val_begin + static_cast<std::int64_t>(val_hours) * kSecondsPerHour;
    f.spec.test_begin = f.spec.val_end;
    f.spec.test_end = f.spec.test_begin + static_cast<std::int64_t>(test_hours) * kSecondsPerHour;
    f.rows = fixed_split(f.matrix, f.spec);
    return f;
}

}  // namespace

TEST_CASE("fixed_split maps windows onto matrix rows") {
    const Fixture f = make_fixture();
    CHECK(f.rows.train.begin == 0);  // warm-up clipped from the train window
    CHECK(f.rows.train.size() == 24 * 90);
    CHECK(f.rows.val.size() == 24 * 30);
    CHECK(f.rows.test.size() == 52 * 168);
    CHECK(f.rows.train.end == f.rows.val.begin);
    CHECK(f.rows.val.end == f.rows.test.begin);

    SUBCASE("shifting the test start by +24h removes 24 rows") {
        SplitSpec shifted = f.spec;
        shifted.test_begin += 24 * kSecondsPerHour;
        const SplitRows rows = fixed_split(f.matrix, shifted);
        CHECK(rows.test.size() == f.rows.test.size() - 24);
    }

    SUBCASE("empty validation window is a protocol error") {
        SplitSpec bad = f.spec;
        bad.val_end = bad.val_begin;
        CHECK_THROWS_AS(fixed_split(f.matrix, bad), std::invalid_argument);
    }

    SUBCASE("overlapping windows are rejected") {
        SplitSpec bad = f.spec;
        bad.train_end = bad.val_begin + 24 * kSecondsPerHour;
        CHECK_THROWS_AS(fixed_split(f.matrix, bad), std::invalid_argument);
    }
}

TEST_CASE("naive forecasters repeat lagged targets") {
    const Fixture f = make_fixture(24 * 30, 24 * 10, 168 * 4);
    NaiveForecaster naive24(24);
    NaiveForecaster naive168(168);
    CHECK(naive24.name() == "naive-24h");
    CHECK(naive168.name() == "naive-168h");
    const auto p24 = naive24.predict(f.matrix, f.rows.test);
    for (std::size_t i = 0; i < p24.size(); ++i)
        CHECK(p24[i] == f.matrix.target[f.rows.test.begin + i - 24]);
    const auto p168 = naive168.predict(f.matrix, f.rows.test);
    for (std::size_t i = 0; i < p168.size(); ++i)
        CHECK(p168[i] == f.matrix.target[f.rows.test.begin + i - 168]);

    CHECK_THROWS_AS(naive24.predict(f.matrix, RowRange{0, 10}), std::invalid_argument);
}

TEST_CASE("window_experiment") {
    const Fixture f = make_fixture(24 * 120, 24 * 20, 168 * 2);
    GBDTConfig config;
    config.num_leaves = 15;
    config.max_rounds = 25;
    config.early_stopping_patience = 10;
    config.min_samples_per_leaf = 5;
    config.seed = 3;

    const UtcSeconds w_begin = f.spec.train_begin;
    const UtcSeconds w_end = f.spec.train_end;

    SUBCASE("identical windows produce identical reports") {
        const auto results = window_experiment(
            f.matrix,
            {{"a", {w_begin, w_end}}, {"b", {w_begin, w_end}}, {"c", {w_begin, w_end}}},
            f.rows.val, f.rows.test, config);
        REQUIRE(results.size() == 3);
        CHECK(results[0].metrics.mae == results[1].metrics.mae);
        CHECK(results[1].metrics.mae == results[2].metrics.mae);
        CHECK(results[0].best_round == results[2].best_round);
    }

    SUBCASE("window overlapping validation is rejected") {
        CHECK_THROWS_AS(window_experiment(f.matrix,
                                          {{"bad", {w_begin, f.spec.val_end}}}, f.rows.val,
                                          f.rows.test, config),
                        std::invalid_argument);
    }
}

namespace {

// Same predictions as a reference model but under a different name, to
// exercise the tie-flag path.
class ShadowNaive final : public Forecaster {
  public:
    std::string name() const override { return "shadow"; }
    bool needs_training() const override { return false; }
    void fit(const FeatureMatrix&, const RowRange&, const RowRange&) override {}
    std::vector<double> predict(const FeatureMatrix& m, const RowRange& rows) const override {
        return NaiveForecaster(24).predict(m, rows);
    }
};

}  // namespace

TEST_CASE("rolling_backtest") {
    const Fixture f = make_fixture();
    BacktestSpec spec;  // 52 x 168h, frozen
    NaiveForecaster naive24(24);
    NaiveForecaster naive168(168);

    SUBCASE("52 steps per model, disjoint windows covering the test year") {
        const auto result =
            rolling_backtest(f.matrix, f.rows.test, spec, {&naive24, &naive168}, "naive-24h");
        CHECK(!result.truncated_final_step);
        int count24 = 0, count168 = 0;
        for (const auto& row : result.rows) {
            if (row.model == "naive-24h") ++count24;
            if (row.model == "naive-168h") ++count168;
            CHECK(row.week >= 1);
            CHECK(row.week <= 52);
        }
        CHECK(count24 == 52);
        CHECK(count168 == 52);
    }

    SUBCASE("model identical to the reference scores zero wins and 52 ties") {
        ShadowNaive shadow;
        const auto result =
            rolling_backtest(f.matrix, f.rows.test, spec, {&naive24, &shadow}, "naive-24h");
        CHECK(result.wins("shadow") == 0);
        int ties = 0;
        for (const auto& row : result.rows)
            if (row.model == "shadow" && row.tie) ++ties;
        CHECK(ties == 52);
    }

    SUBCASE("partial trailing week is truncated and flagged") {
        RowRange short_test{f.rows.test.begin, f.rows.test.end - 100};
        const auto result =
            rolling_backtest(f.matrix, short_test, spec, {&naive24}, "naive-24h");
        CHECK(result.truncated_final_step);
        CHECK(result.rows.back().week == 52);
    }

    SUBCASE("causal ordering in expanding refit: training always precedes the origin") {
        // A probe model that records the ranges it was fitted on.
        class Probe final : public Forecaster {
          public:
            std::string name() const override { return "probe"; }
            void fit(const FeatureMatrix&, const RowRange& train, const RowRange& val) override {
                fits.push_back({train, val});
            }
            std::vector<double> predict(const FeatureMatrix& m,
                                        const RowRange& rows) const override {
                return std::vector<double>(rows.size(), m.target[rows.begin - 24]);
            }
            std::vector<std::pair<RowRange, RowRange>> fits;
        };
        BacktestSpec expanding;
        expanding.refit_mode = RefitMode::ExpandingRefit;
        expanding.steps = 4;
        expanding.expanding_val_tail_hours = 24 * 14;
        Probe probe;
        NaiveForecaster ref(24);
        const auto result =
            rolling_backtest(f.matrix, f.rows.test, expanding, {&probe, &ref}, "naive-24h");
        REQUIRE(probe.fits.size() == 4);
        for (std::size_t step = 0; step < probe.fits.size(); ++step) {
            const std::size_t origin = f.rows.test.begin + step * 168;
            CHECK(probe.fits[step].first.begin == 0);
            CHECK(probe.fits[step].second.end == origin);  // everything before the origin
            CHECK(probe.fits[step].first.end == probe.fits[step].second.begin);
        }
    }

    SUBCASE("missing reference model is rejected") {
        CHECK_THROWS_AS(rolling_backtest(f.matrix, f.rows.test, spec, {&naive168}, "naive-24h"),
                        std::invalid_argument);
    }
}
