#pragma once

#include <map>
#include <string>
#include <vector>

#include "epf/features.hpp"
#include "epf/forecasters.hpp"
#include "epf/gbdt.hpp"
#include "epf/metrics.hpp"
#include "epf/time_utils.hpp"

namespace epf {

// Half-open UTC windows; strictly ordered so the test set post-dates
// everything used for model selection.
struct SplitSpec {
    UtcSeconds train_begin = 0, train_end = 0;
    UtcSeconds val_begin = 0, val_end = 0;
    UtcSeconds test_begin = 0, test_end = 0;

    void validate() const;
};

struct SplitRows {
    RowRange train;
    RowRange val;
    RowRange test;
};

// Maps the split windows onto matrix rows. The train window may clip at the
// matrix start (warm-up trimming); validation and test must lie inside.
SplitRows fixed_split(const FeatureMatrix& m, const SplitSpec& spec);

struct WindowResult {
    std::string window;
    UtcSeconds begin = 0, end = 0;
    MetricReport metrics;
    int best_round = 0;
};

// One GBDT per named training window, identical features, shared validation
// for early stopping and shared test for evaluation. Windows must end at or
// before the validation start.
std::vector<WindowResult> window_experiment(
    const FeatureMatrix& m,
    const std::vector<std::pair<std::string, std::pair<UtcSeconds, UtcSeconds>>>& windows,
    const RowRange& val, const RowRange& test, const GBDTConfig& config);

enum class RefitMode { FrozenModel, ExpandingRefit };
std::string to_string(RefitMode mode);
RefitMode refit_mode_from_string(const std::string& s);

struct BacktestSpec {
    int step_hours = 168;
    int steps = 52;
    RefitMode refit_mode = RefitMode::FrozenModel;
    // Expanding-refit reserves this many hours before each origin as the
    // early-stopping validation tail.
    int expanding_val_tail_hours = 8784;

    void validate() const;
};

struct BacktestRow {
    int week = 0;  // 1-based step index
    std::string model;
    double mae = 0.0;
    bool win = false;  // strictly beat the reference this week
    bool tie = false;
};

struct BacktestResult {
    std::vector<BacktestRow> rows;
    std::string reference;
    RefitMode refit_mode = RefitMode::FrozenModel;
    bool truncated_final_step = false;

    int wins(const std::string& model) const;
};

// 52-step weekly rolling-origin backtest over the test rows. Frozen mode
// evaluates already-fitted models; expanding mode refits each model on all
// rows before the origin. A partial trailing week is evaluated short and
// flagged. Models must already be fitted when frozen mode is used.
BacktestResult rolling_backtest(const FeatureMatrix& m, const RowRange& test,
                                const BacktestSpec& spec,
                                std::vector<Forecaster*> models,
                                const std::string& reference);

}  // namespace epf
