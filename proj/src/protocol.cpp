#include "epf/protocol.hpp"

#include <algorithm>
#include <stdexcept>

namespace epf {

void SplitSpec::validate() const {
    const auto aligned = [](UtcSeconds t) { return t % kSecondsPerHour == 0; };
    if (!aligned(train_begin) || !aligned(train_end) || !aligned(val_begin) ||
        !aligned(val_end) || !aligned(test_begin) || !aligned(test_end))
        throw std::invalid_argument("split boundaries must be hour-aligned UTC");
    if (!(train_begin < train_end))
        throw std::invalid_argument("empty training window");
    if (!(val_begin < val_end)) throw std::invalid_argument("empty validation window");
    if (!(test_begin < test_end)) throw std::invalid_argument("empty test window");
    if (train_end > val_begin || val_end > test_begin)
        throw std::invalid_argument(
            "split windows must be ordered train < validation < test without overlap");
}

namespace {

std::size_t row_of(const FeatureMatrix& m, UtcSeconds t) {
    const std::int64_t off = t - m.start;
    if (off % kSecondsPerHour != 0)
        throw std::invalid_argument("split boundary is not hour-aligned to the matrix");
    if (off < 0) throw std::invalid_argument("split boundary precedes the matrix start");
    const auto r = static_cast<std::size_t>(off / kSecondsPerHour);
    if (r > m.rows()) throw std::invalid_argument("split boundary exceeds the matrix end");
    return r;
}

}  // namespace

SplitRows fixed_split(const FeatureMatrix& m, const SplitSpec& spec) {
    spec.validate();
    SplitRows rows;
    // Warm-up trimming may swallow the head of the training window.
    const UtcSeconds train_begin = std::max(spec.train_begin, m.start);
    if (train_begin >= spec.train_end)
        throw std::invalid_argument("training window lies entirely inside the warm-up");
    rows.train = {row_of(m, train_begin), row_of(m, spec.train_end)};
    rows.val = {row_of(m, spec.val_begin), row_of(m, spec.val_end)};
    rows.test = {row_of(m, spec.test_begin), row_of(m, spec.test_end)};
    return rows;
}

std::vector<WindowResult> window_experiment(
    const FeatureMatrix& m,
    const std::vector<std::pair<std::string, std::pair<UtcSeconds, UtcSeconds>>>& windows,
    const RowRange& val, const RowRange& test, const GBDTConfig& config) {
    if (windows.empty()) throw std::invalid_argument("no training windows given");
    if (val.empty() || test.empty())
        throw std::invalid_argument("validation and test ranges must be nonempty");

    std::vector<WindowResult> out;
    for (const auto& [name, bounds] : windows) {
        const auto [begin, end] = bounds;
        if (end > m.hour_at(val.begin))
            throw std::invalid_argument("training window '" + name +
                                        "' overlaps the validation set");
        const UtcSeconds clipped = std::max(begin, m.start);
        if (clipped >= end)
            throw std::invalid_argument("training window '" + name + "' is empty");
        RowRange train{static_cast<std::size_t>((clipped - m.start) / kSecondsPerHour),
                       static_cast<std::size_t>((end - m.start) / kSecondsPerHour)};

        GBDTForecaster model(config);
        model.fit(m, train, val);
        const auto pred = model.predict(m, test);
        WindowResult r;
        r.window = name;
        r.begin = begin;
        r.end = end;
        r.metrics = metric_report({m.target.data() + test.begin, test.size()}, pred);
        r.best_round = model.model().best_round;
        out.push_back(std::move(r));
    }
    return out;
}

std::string to_string(RefitMode mode) {
    return mode == RefitMode::FrozenModel ? "frozen-model" : "expanding-refit";
}

RefitMode refit_mode_from_string(const std::string& s) {
    if (s == "frozen-model") return RefitMode::FrozenModel;
    if (s == "expanding-refit") return RefitMode::ExpandingRefit;
    throw std::invalid_argument("unknown refit mode: '" + s + "'");
}

void BacktestSpec::validate() const {
    if (step_hours < 1) throw std::invalid_argument("backtest step must be positive");
    if (steps < 1) throw std::invalid_argument("backtest needs at least one step");
    if (refit_mode == RefitMode::ExpandingRefit && expanding_val_tail_hours < 1)
        throw std::invalid_argument("expanding refit needs a validation tail");
}

int BacktestResult::wins(const std::string& model) const {
    int count = 0;
    for (const auto& row : rows)
        if (row.model == model && row.win) ++count;
    return count;
}

BacktestResult rolling_backtest(const FeatureMatrix& m, const RowRange& test,
                                const BacktestSpec& spec,
                                std::vector<Forecaster*> models,
                                const std::string& reference) {
    spec.validate();
    if (models.empty()) throw std::invalid_argument("no models to backtest");
    const bool have_reference =
        std::any_of(models.begin(), models.end(),
                    [&](const Forecaster* f) { return f->name() == reference; });
    if (!have_reference)
        throw std::invalid_argument("reference model '" + reference +
                                    "' is not in the backtest roster");

    const auto step = static_cast<std::size_t>(spec.step_hours);
    const std::size_t needed = step * static_cast<std::size_t>(spec.steps);
    BacktestResult result;
    result.reference = reference;
    result.refit_mode = spec.refit_mode;
    if (test.size() < needed) result.truncated_final_step = true;

    for (int week = 1; week <= spec.steps; ++week) {
        const std::size_t origin = test.begin + static_cast<std::size_t>(week - 1) * step;
        if (origin >= test.end) break;
        const RowRange window{origin, std::min(origin + step, test.end)};

        std::map<std::string, double> week_mae;
        for (Forecaster* model : models) {
            if (spec.refit_mode == RefitMode::ExpandingRefit && model->needs_training()) {
                const auto tail = static_cast<std::size_t>(spec.expanding_val_tail_hours);
                if (origin <= tail)
                    throw std::invalid_argument(
                        "not enough history before the first origin for expanding refit");
                const RowRange train{0, origin - tail};
                const RowRange val{origin - tail, origin};
                model->fit(m, train, val);
            }
            const auto pred = model->predict(m, window);
            week_mae[model->name()] =
                mae({m.target.data() + window.begin, window.size()}, pred);
        }
        const double ref_mae = week_mae.at(reference);
        for (Forecaster* model : models) {
            BacktestRow row;
            row.week = week;
            row.model = model->name();
            row.mae = week_mae.at(model->name());
            row.tie = model->name() != reference && row.mae == ref_mae;
            row.win = row.mae < ref_mae;
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

}  // namespace epf
