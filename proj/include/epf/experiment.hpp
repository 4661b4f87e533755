#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "epf/features.hpp"
#include "epf/gbdt.hpp"
#include "epf/protocol.hpp"

namespace epf {

// Exit-code mapping: ConfigError -> 1, DataError -> 2, anything else -> 3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ZoneInput {
    std::string csv;
    std::string schema;
};

std::string feature_spec_to_json(const FeatureSpec& spec);
FeatureSpec feature_spec_from_json(const std::string& text);

// One JSON document drives every command; the resolved copy lands in the run
// directory for provenance.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    int jobs = 1;
    std::map<std::string, ZoneInput> zones;  // keyed by zone code
    double sparse_threshold = 0.5;
    FeatureSpec features;
    SplitSpec split;
    std::vector<std::string> roster = {"naive-24h", "naive-168h", "ridge", "gbdt"};
    std::vector<double> lambda_grid = {0.1, 1.0, 10.0, 100.0};
    GBDTConfig gbdt;
    BacktestSpec backtest;
    bool run_ablation = true;
    bool run_regimes = true;
    std::size_t failures_k = 20;
    std::vector<std::pair<std::string, std::pair<UtcSeconds, UtcSeconds>>> windows;
    std::string regime_reservoir_column;  // empty = first reservoir anomaly column
    std::string regime_ttf_column;        // empty = first commodities column

    static ExperimentConfig from_json(const std::string& text);
    static ExperimentConfig from_json_file(const std::string& path);
    std::string to_json() const;
    std::uint64_t hash() const;  // FNV-1a over the resolved JSON

    std::vector<std::string> zone_codes() const;  // fixed NO1..NO5 order
    void validate() const;
};

// Every command appends a stage entry and merges its file inventory into
// <output_dir>/manifest.json. Wall times vary between runs; everything else
// is reproducible.
void record_manifest(const ExperimentConfig& config, const std::string& stage,
                     const std::vector<std::string>& files, std::int64_t wall_ms);

int cmd_ingest(const ExperimentConfig& config);
int cmd_run(const ExperimentConfig& config);
int cmd_backtest(const ExperimentConfig& config);
int cmd_windows(const ExperimentConfig& config);
int cmd_ablate(const ExperimentConfig& config);
int cmd_regimes(const ExperimentConfig& config);
int cmd_failures(const ExperimentConfig& config);

}  // namespace epf
