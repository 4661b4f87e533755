// Emits synthetic zone snapshots, schema sidecars and an experiment config
// under the directory given as argv[1], for CLI-level pipeline tests.

#include <cstdio>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "epf/csv.hpp"
#include "epf/time_utils.hpp"
#include "support/synthetic.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: gen_synth_data <dir>\n");
        return 1;
    }
    namespace fs = std::filesystem;
    using namespace epf;
    const fs::path dir(argv[1]);
    fs::create_directories(dir);

    const UtcSeconds start = utc_from_civil(2023, 1, 2);
    const std::size_t train_hours = 24 * 100;
    const std::size_t val_hours = 24 * 20;
    const std::size_t test_hours = 168 * 8;
    const std::size_t hours = 168 + train_hours + val_hours + test_hours;

    nlohmann::json zones;
    int seed = 100;
    for (const char* code : {"NO1", "NO2"}) {
        const auto zone = testsupport::make_zone(zone_from_string(code), start, hours,
                                                 static_cast<std::uint64_t>(seed++));
        const std::string csv = (dir / (std::string(code) + ".csv")).string();
        const std::string schema = (dir / (std::string(code) + ".schema.json")).string();
        testsupport::write_zone_snapshot(zone, csv, schema);
        zones[code] = {{"csv", csv}, {"schema", schema}};
    }

    const UtcSeconds train_end = start + static_cast<std::int64_t>(168 + train_hours) * kSecondsPerHour;
    const UtcSeconds val_end = train_end + static_cast<std::int64_t>(val_hours) * kSecondsPerHour;
    const UtcSeconds test_end = val_end + static_cast<std::int64_t>(test_hours) * kSecondsPerHour;

    nlohmann::json config;
    config["seed"] = 7;
    config["output_dir"] = (dir / "out").string();
    config["jobs"] = 2;
    config["zones"] = zones;
    config["features"] = {
        {"exogenous_groups",
         {{"reservoir_fill", "reservoir"}, {"ttf", "commodities"}, {"load_forecast", "load_wsf"}}}};
    config["split"] = {
        {"train", {format_utc_timestamp(start), format_utc_timestamp(train_end)}},
        {"validation", {format_utc_timestamp(train_end), format_utc_timestamp(val_end)}},
        {"test", {format_utc_timestamp(val_end), format_utc_timestamp(test_end)}}};
    config["models"] = {
        {"roster", {"naive-24h", "naive-168h", "ridge", "gbdt"}},
        {"gbdt",
         {{"num_leaves", 15}, {"max_rounds", 40}, {"early_stopping_patience", 10},
          {"min_samples_per_leaf", 5}}}};
    config["backtest"] = {{"steps", 8}, {"step_hours", 168}, {"refit_mode", "frozen-model"}};
    config["analysis"] = {
        {"ablation", true},
        {"regimes", true},
        {"failures_k", 10},
        {"windows",
         {{"first-half", {format_utc_timestamp(start),
                          format_utc_timestamp(start + 1368 * kSecondsPerHour)}},
          {"full", {format_utc_timestamp(start), format_utc_timestamp(train_end)}}}}};
    atomic_write_file((dir / "config.json").string(), config.dump(2));

    // Baseline-only variant: no trained models at all.
    nlohmann::json naive_config = config;
    naive_config["output_dir"] = (dir / "out_naive").string();
    naive_config["models"]["roster"] = {"naive-24h", "naive-168h"};
    atomic_write_file((dir / "config_naive.json").string(), naive_config.dump(2));
    return 0;
}
