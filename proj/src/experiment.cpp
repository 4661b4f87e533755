#include "epf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "epf/analysis.hpp"
#include "epf/csv.hpp"
#include "epf/dm_test.hpp"
#include "epf/forecasters.hpp"
#include "epf/linmod.hpp"
#include "epf/metrics.hpp"
#include "epf/panel_io.hpp"

namespace epf {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int log_level() {
    static const int level = [] {
        const char* env = std::getenv("EPF_LOG");
        if (!env) return 1;
        const std::string v(env);
        if (v == "quiet") return 0;
        if (v == "debug") return 2;
        return 1;
    }();
    return level;
}

std::mutex log_mutex;

void log_info(const std::string& msg) {
    if (log_level() < 1) return;
    std::lock_guard lock(log_mutex);
    std::fprintf(stderr, "[epf] %s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
    if (log_level() < 2) return;
    std::lock_guard lock(log_mutex);
    std::fprintf(stderr, "[epf:debug] %s\n", msg.c_str());
}

UtcSeconds parse_ts(const json& j, const std::string& what) {
    try {
        return parse_utc_timestamp(j.get<std::string>());
    } catch (const std::exception& e) {
        throw ConfigError(what + ": " + e.what());
    }
}

std::pair<UtcSeconds, UtcSeconds> parse_window(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2)
        throw ConfigError(what + " must be a [begin, end) timestamp pair");
    return {parse_ts(j[0], what), parse_ts(j[1], what)};
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; first exception wins.
void parallel_apply(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const auto workers = static_cast<std::size_t>(std::max(1, jobs));
    if (workers == 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    for (std::size_t w = 0; w < std::min(workers, n); ++w) {
        threads.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

std::string feature_spec_to_json(const FeatureSpec& spec) {
    json j;
    j["target_lags"] = spec.target_lags;
    json rolling = json::array();
    for (const auto& r : spec.target_rolling)
        rolling.push_back({{"window", r.window},
                           {"stat", r.stat == RollingStat::Mean ? "mean" : "std"}});
    j["target_rolling"] = std::move(rolling);
    j["hour_of_day"] = spec.hour_of_day;
    j["day_of_week"] = spec.day_of_week;
    j["day_of_year"] = spec.day_of_year;
    j["weekend_flag"] = spec.weekend_flag;
    json groups;
    for (const auto& [name, group] : spec.exogenous_groups) groups[name] = to_string(group);
    j["exogenous_groups"] = std::move(groups);
    j["reservoir_anomaly"] = spec.reservoir_anomaly;
    if (spec.anomaly_baseline_end != 0)
        j["anomaly_baseline_end"] = format_utc_timestamp(spec.anomaly_baseline_end);
    return j.dump(2);
}

FeatureSpec feature_spec_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("feature spec is not valid JSON: ") + e.what());
    }
    FeatureSpec spec;
    if (j.contains("target_lags")) spec.target_lags = j["target_lags"].get<std::vector<int>>();
    if (j.contains("target_rolling")) {
        spec.target_rolling.clear();
        for (const auto& r : j["target_rolling"]) {
            RollingSpec rs;
            rs.window = r.at("window").get<int>();
            const std::string stat = r.at("stat").get<std::string>();
            if (stat == "mean")
                rs.stat = RollingStat::Mean;
            else if (stat == "std")
                rs.stat = RollingStat::Std;
            else
                throw ConfigError("unknown rolling statistic: '" + stat + "'");
            spec.target_rolling.push_back(rs);
        }
    }
    spec.hour_of_day = j.value("hour_of_day", spec.hour_of_day);
    spec.day_of_week = j.value("day_of_week", spec.day_of_week);
    spec.day_of_year = j.value("day_of_year", spec.day_of_year);
    spec.weekend_flag = j.value("weekend_flag", spec.weekend_flag);
    if (j.contains("exogenous_groups"))
        for (const auto& [name, group] : j["exogenous_groups"].items())
            spec.exogenous_groups[name] = feature_group_from_string(group.get<std::string>());
    spec.reservoir_anomaly = j.value("reservoir_anomaly", spec.reservoir_anomaly);
    if (j.contains("anomaly_baseline_end"))
        spec.anomaly_baseline_end = parse_ts(j["anomaly_baseline_end"], "anomaly_baseline_end");
    return spec;
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    try {
        c.seed = j.value("seed", std::uint64_t{0});
        c.output_dir = j.value("output_dir", std::string("out"));
        c.jobs = j.value("jobs", 1);
        if (!j.contains("zones")) throw ConfigError("config lacks a 'zones' section");
        for (const auto& [code, paths] : j["zones"].items()) {
            zone_from_string(code);  // validates the code
            ZoneInput in;
            in.csv = paths.at("csv").get<std::string>();
            in.schema = paths.at("schema").get<std::string>();
            c.zones[code] = in;
        }
        c.sparse_threshold = j.value("sparse_threshold", 0.5);
        if (j.contains("features"))
            c.features = feature_spec_from_json(j["features"].dump());
        if (!j.contains("split")) throw ConfigError("config lacks a 'split' section");
        {
            const auto& s = j["split"];
            auto tr = parse_window(s.at("train"), "split.train");
            auto va = parse_window(s.at("validation"), "split.validation");
            auto te = parse_window(s.at("test"), "split.test");
            c.split = SplitSpec{tr.first, tr.second, va.first, va.second, te.first, te.second};
        }
        if (j.contains("models")) {
            const auto& m = j["models"];
            if (m.contains("roster")) c.roster = m["roster"].get<std::vector<std::string>>();
            if (m.contains("ridge") && m["ridge"].contains("lambda_grid"))
                c.lambda_grid = m["ridge"]["lambda_grid"].get<std::vector<double>>();
            if (m.contains("gbdt")) {
                const auto& g = m["gbdt"];
                c.gbdt.num_leaves = g.value("num_leaves", c.gbdt.num_leaves);
                c.gbdt.learning_rate = g.value("learning_rate", c.gbdt.learning_rate);
                c.gbdt.row_subsample = g.value("row_subsample", c.gbdt.row_subsample);
                c.gbdt.column_subsample = g.value("column_subsample", c.gbdt.column_subsample);
                c.gbdt.l2_leaf_penalty = g.value("l2_leaf_penalty", c.gbdt.l2_leaf_penalty);
                c.gbdt.max_rounds = g.value("max_rounds", c.gbdt.max_rounds);
                c.gbdt.early_stopping_patience =
                    g.value("early_stopping_patience", c.gbdt.early_stopping_patience);
                c.gbdt.histogram_bins = g.value("histogram_bins", c.gbdt.histogram_bins);
                c.gbdt.min_samples_per_leaf =
                    g.value("min_samples_per_leaf", c.gbdt.min_samples_per_leaf);
            }
        }
        if (j.contains("backtest")) {
            const auto& b = j["backtest"];
            c.backtest.step_hours = b.value("step_hours", c.backtest.step_hours);
            c.backtest.steps = b.value("steps", c.backtest.steps);
            if (b.contains("refit_mode"))
                c.backtest.refit_mode =
                    refit_mode_from_string(b["refit_mode"].get<std::string>());
            c.backtest.expanding_val_tail_hours =
                b.value("expanding_val_tail_hours", c.backtest.expanding_val_tail_hours);
        }
        if (j.contains("analysis")) {
            const auto& a = j["analysis"];
            c.run_ablation = a.value("ablation", c.run_ablation);
            c.run_regimes = a.value("regimes", c.run_regimes);
            c.failures_k = a.value("failures_k", c.failures_k);
            if (a.contains("windows"))
                for (const auto& [name, w] : a["windows"].items())
                    c.windows.emplace_back(name, parse_window(w, "analysis.windows." + name));
            if (a.contains("regime")) {
                c.regime_reservoir_column =
                    a["regime"].value("reservoir_column", std::string());
                c.regime_ttf_column = a["regime"].value("ttf_column", std::string());
            }
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return from_json(text);
}

std::string ExperimentConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["output_dir"] = output_dir;
    j["jobs"] = jobs;
    json zs;
    for (const auto& [code, in] : zones) zs[code] = {{"csv", in.csv}, {"schema", in.schema}};
    j["zones"] = std::move(zs);
    j["sparse_threshold"] = sparse_threshold;
    j["features"] = json::parse(feature_spec_to_json(features));
    j["split"] = {
        {"train", {format_utc_timestamp(split.train_begin), format_utc_timestamp(split.train_end)}},
        {"validation", {format_utc_timestamp(split.val_begin), format_utc_timestamp(split.val_end)}},
        {"test", {format_utc_timestamp(split.test_begin), format_utc_timestamp(split.test_end)}}};
    j["models"] = {{"roster", roster},
                   {"ridge", {{"lambda_grid", lambda_grid}}},
                   {"gbdt",
                    {{"num_leaves", gbdt.num_leaves},
                     {"learning_rate", gbdt.learning_rate},
                     {"row_subsample", gbdt.row_subsample},
                     {"column_subsample", gbdt.column_subsample},
                     {"l2_leaf_penalty", gbdt.l2_leaf_penalty},
                     {"max_rounds", gbdt.max_rounds},
                     {"early_stopping_patience", gbdt.early_stopping_patience},
                     {"histogram_bins", gbdt.histogram_bins},
                     {"min_samples_per_leaf", gbdt.min_samples_per_leaf}}}};
    j["backtest"] = {{"step_hours", backtest.step_hours},
                     {"steps", backtest.steps},
                     {"refit_mode", to_string(backtest.refit_mode)},
                     {"expanding_val_tail_hours", backtest.expanding_val_tail_hours}};
    json windows_json;
    for (const auto& [name, w] : windows)
        windows_json[name] = {format_utc_timestamp(w.first), format_utc_timestamp(w.second)};
    j["analysis"] = {{"ablation", run_ablation},
                     {"regimes", run_regimes},
                     {"failures_k", failures_k},
                     {"windows", std::move(windows_json)},
                     {"regime",
                      {{"reservoir_column", regime_reservoir_column},
                       {"ttf_column", regime_ttf_column}}}};
    return j.dump(2);
}

std::uint64_t ExperimentConfig::hash() const {
    const std::string text = to_json();
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<std::string> ExperimentConfig::zone_codes() const {
    std::vector<std::string> codes;
    for (ZoneId z : all_zones())
        if (zones.count(to_string(z))) codes.push_back(to_string(z));
    return codes;
}

void ExperimentConfig::validate() const {
    if (zones.empty()) throw ConfigError("no zones configured");
    if (roster.empty()) throw ConfigError("empty model roster");
    for (const auto& name : roster)
        if (name != "naive-24h" && name != "naive-168h" && name != "ridge" && name != "gbdt")
            throw ConfigError("unknown roster model: '" + name + "'");
    try {
        split.validate();
        gbdt.validate();
        backtest.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (jobs < 1) throw ConfigError("jobs must be at least 1");
}

namespace {

std::string out_path(const ExperimentConfig& c, const std::string& name) {
    return (fs::path(c.output_dir) / name).string();
}

std::string panel_csv_path(const ExperimentConfig& c, const std::string& zone) {
    return out_path(c, "panel_" + zone + ".csv");
}
std::string panel_meta_path(const ExperimentConfig& c, const std::string& zone) {
    return out_path(c, "panel_" + zone + ".meta.json");
}
std::string model_path(const ExperimentConfig& c, const std::string& model,
                       const std::string& zone) {
    return out_path(c, "model_" + model + "_" + zone + ".json");
}
std::string forecast_path(const ExperimentConfig& c, const std::string& model,
                          const std::string& zone) {
    return out_path(c, "forecast_" + model + "_" + zone + ".csv");
}

struct ZoneData {
    HourlyPanel panel;
    FeatureMatrix matrix;
    SplitRows rows;
};

FeatureSpec resolved_feature_spec(const ExperimentConfig& config) {
    FeatureSpec spec = config.features;
    if (spec.anomaly_baseline_end == 0) spec.anomaly_baseline_end = config.split.train_end;
    return spec;
}

ZoneData load_zone(const ExperimentConfig& config, const std::string& zone) {
    const std::string csv = panel_csv_path(config, zone);
    if (!fs::exists(csv))
        throw DataError("missing finalized panel '" + csv + "'; run `epf ingest` first");
    ZoneData data;
    try {
        data.panel = read_panel(csv, panel_meta_path(config, zone));
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }
    data.matrix = assemble_matrix(data.panel, resolved_feature_spec(config));
    data.rows = fixed_split(data.matrix, config.split);
    return data;
}

std::vector<std::unique_ptr<Forecaster>> build_roster(const ExperimentConfig& config,
                                                      std::uint64_t seed) {
    std::vector<std::unique_ptr<Forecaster>> models;
    for (const auto& name : config.roster) {
        if (name == "naive-24h") {
            models.push_back(std::make_unique<NaiveForecaster>(24));
        } else if (name == "naive-168h") {
            models.push_back(std::make_unique<NaiveForecaster>(168));
        } else if (name == "ridge") {
            models.push_back(std::make_unique<RidgeForecaster>(config.lambda_grid));
        } else if (name == "gbdt") {
            GBDTConfig g = config.gbdt;
            g.seed = seed;
            models.push_back(std::make_unique<GBDTForecaster>(g));
        }
    }
    return models;
}

std::string forecast_csv(const FeatureMatrix& m, const RowRange& rows,
                         std::span<const double> forecast) {
    std::ostringstream out;
    out << "timestamp,actual,forecast\n";
    for (std::size_t r = 0; r < rows.size(); ++r)
        out << format_utc_timestamp(m.hour_at(rows.begin + r)) << ','
            << format_csv_number(m.target[rows.begin + r]) << ','
            << format_csv_number(forecast[r]) << '\n';
    return out.str();
}

std::vector<double> read_forecast_csv(const std::string& path, const FeatureMatrix& m,
                                      const RowRange& rows, const std::string& producer) {
    if (!fs::exists(path))
        throw DataError("missing forecast '" + path + "'; run `epf " + producer + "` first");
    const CsvTable table = read_timestamp_csv(path);
    if (table.rows() != rows.size() || table.timestamps.front() != m.hour_at(rows.begin))
        throw DataError("forecast '" + path + "' does not cover the configured test window");
    const auto idx = std::find(table.column_names.begin(), table.column_names.end(),
                               std::string("forecast"));
    if (idx == table.column_names.end())
        throw DataError("forecast '" + path + "' lacks a 'forecast' column");
    return table.columns[static_cast<std::size_t>(idx - table.column_names.begin())];
}

// Regime state columns, read at forecast time from the feature matrix.
std::pair<std::string, std::string> regime_columns(const ExperimentConfig& config,
                                                   const FeatureMatrix& m) {
    std::string res = config.regime_reservoir_column;
    std::string gas = config.regime_ttf_column;
    if (res.empty()) {
        for (std::size_t c = 0; c < m.num_columns(); ++c)
            if (m.groups[c] == FeatureGroup::Reservoir &&
                m.names[c].ends_with("_anom")) {
                res = m.names[c];
                break;
            }
    }
    if (gas.empty()) {
        for (std::size_t c = 0; c < m.num_columns(); ++c)
            if (m.groups[c] == FeatureGroup::Commodities) {
                gas = m.names[c];
                break;
            }
    }
    if (res.empty() || gas.empty())
        throw DataError(
            "regime analysis needs a reservoir anomaly column and a commodities column; "
            "set analysis.regime in the config");
    if (!m.find_column(res))
        throw DataError("regime reservoir column '" + res + "' is not in the feature matrix");
    if (!m.find_column(gas))
        throw DataError("regime gas column '" + gas + "' is not in the feature matrix");
    return {res, gas};
}

std::vector<double> column_over(const FeatureMatrix& m, const std::string& name,
                                const RowRange& rows) {
    const auto idx = m.find_column(name);
    if (!idx) throw DataError("feature matrix lacks column '" + name + "'");
    const auto& col = m.cols[*idx];
    return std::vector<double>(col.begin() + static_cast<std::ptrdiff_t>(rows.begin),
                               col.begin() + static_cast<std::ptrdiff_t>(rows.end));
}

class StageTimer {
  public:
    StageTimer() : start_(std::chrono::steady_clock::now()) {}
    std::int64_t elapsed_ms() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

void write_resolved_config(const ExperimentConfig& config) {
    atomic_write_file(out_path(config, "config_resolved.json"), config.to_json());
}

}  // namespace

void record_manifest(const ExperimentConfig& config, const std::string& stage,
                     const std::vector<std::string>& files, std::int64_t wall_ms) {
    const std::string path = out_path(config, "manifest.json");
    json manifest;
    if (fs::exists(path)) {
        try {
            manifest = json::parse(read_text_file(path));
        } catch (...) {
            manifest = json::object();
        }
    }
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(config.hash()));
    manifest["config_hash"] = std::string(hash_hex);
    manifest["artifact_version"] = "0.1.0";
    if (!manifest.contains("stages")) manifest["stages"] = json::array();
    manifest["stages"].push_back(
        {{"name", stage}, {"status", "ok"}, {"wall_ms", wall_ms}});
    if (!manifest.contains("files")) manifest["files"] = json::object();
    for (const auto& f : files) {
        const std::string rel = fs::relative(f, config.output_dir).string();
        manifest["files"][rel] = {{"stage", stage},
                                  {"bytes", static_cast<std::int64_t>(fs::file_size(f))}};
    }
    atomic_write_file(path, manifest.dump(2));
}

int cmd_ingest(const ExperimentConfig& config) {
    StageTimer timer;
    const auto codes = config.zone_codes();

    // Validate all inputs before writing anything.
    for (const auto& code : codes) {
        const auto& in = config.zones.at(code);
        if (!fs::exists(in.csv)) throw DataError("missing input file '" + in.csv + "'");
        if (!fs::exists(in.schema)) throw DataError("missing schema file '" + in.schema + "'");
    }

    std::vector<HourlyPanel> panels(codes.size());
    std::vector<IngestReport> reports(codes.size());
    parallel_apply(codes.size(), config.jobs, [&](std::size_t i) {
        const auto& in = config.zones.at(codes[i]);
        ZoneSchema schema;
        try {
            schema = ZoneSchema::from_json(read_text_file(in.schema));
            if (to_string(schema.zone) != codes[i])
                throw std::runtime_error("schema zone '" + to_string(schema.zone) +
                                         "' does not match configured zone '" + codes[i] + "'");
            panels[i] = ingest_zone(in.csv, schema, &reports[i], config.sparse_threshold);
        } catch (const std::exception& e) {
            throw DataError(e.what());
        }
        log_info("ingested " + codes[i] + ": " + std::to_string(panels[i].rows()) + " hours, " +
                 std::to_string(panels[i].num_columns()) + " exogenous columns");
    });

    std::vector<std::string> files;
    for (std::size_t i = 0; i < codes.size(); ++i) {
        write_panel(panels[i], panel_csv_path(config, codes[i]),
                    panel_meta_path(config, codes[i]));
        files.push_back(panel_csv_path(config, codes[i]));
        files.push_back(panel_meta_path(config, codes[i]));
    }
    atomic_write_file(out_path(config, "integrity_report.json"),
                      ingest_report_to_json(reports));
    files.push_back(out_path(config, "integrity_report.json"));
    write_resolved_config(config);
    files.push_back(out_path(config, "config_resolved.json"));
    record_manifest(config, "ingest", files, timer.elapsed_ms());
    return 0;
}

namespace {

struct RunZoneOutput {
    std::vector<std::pair<std::string, MetricReport>> metrics;  // per model
    std::vector<PairwiseEntry> dm;
    std::map<std::string, std::string> model_documents;   // model name -> JSON
    std::map<std::string, std::string> forecast_documents;  // model name -> CSV
    std::string training_log;  // gbdt per-round CSV, may be empty
};

RunZoneOutput run_zone(const ExperimentConfig& config, const std::string& code) {
    const ZoneData data = load_zone(config, code);
    auto models = build_roster(config, config.seed);

    RunZoneOutput out;
    std::map<std::string, std::vector<double>> test_forecasts;
    for (auto& model : models) {
        model->fit(data.matrix, data.rows.train, data.rows.val);
        auto pred = model->predict(data.matrix, data.rows.test);
        const auto report = metric_report(
            {data.matrix.target.data() + data.rows.test.begin, data.rows.test.size()}, pred);
        out.metrics.emplace_back(model->name(), report);
        out.forecast_documents[model->name()] =
            forecast_csv(data.matrix, data.rows.test, pred);
        test_forecasts[model->name()] = std::move(pred);
        log_debug(code + " " + model->name() + ": test MAE " + std::to_string(report.mae));

        if (auto* gbdt = dynamic_cast<GBDTForecaster*>(model.get())) {
            out.model_documents["gbdt"] = gbdt_to_json(gbdt->model());
            std::ostringstream log;
            log << "round,train_mae,val_mae\n";
            const auto& m = gbdt->model();
            for (std::size_t r = 0; r < m.train_mae_log.size(); ++r)
                log << (r + 1) << ',' << format_csv_number(m.train_mae_log[r]) << ','
                    << format_csv_number(m.val_mae_log[r]) << '\n';
            out.training_log = log.str();
        } else if (auto* ridge = dynamic_cast<RidgeForecaster*>(model.get())) {
            out.model_documents["ridge"] = ridge_to_json(ridge->model());
        }
    }

    // Ordered DM pairs: each more complex model against every simpler one.
    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t i = config.roster.size(); i-- > 0;)
        for (std::size_t k = 0; k < i; ++k)
            pairs.emplace_back(config.roster[i], config.roster[k]);
    const std::span<const double> actual{
        data.matrix.target.data() + data.rows.test.begin, data.rows.test.size()};
    out.dm = pairwise_matrix(actual, test_forecasts, pairs, DMConfig{});
    return out;
}

}  // namespace

int cmd_run(const ExperimentConfig& config) {
    StageTimer timer;
    const auto codes = config.zone_codes();
    std::vector<RunZoneOutput> outputs(codes.size());
    parallel_apply(codes.size(), config.jobs, [&](std::size_t i) {
        outputs[i] = run_zone(config, codes[i]);
        log_info("evaluated " + codes[i]);
    });

    std::vector<std::string> files;
    std::ostringstream metrics;
    metrics << "zone,model,mae,rmse,smape,r2,n\n";
    std::ostringstream dm_csv;
    dm_csv << "zone,model_a,model_b,d_bar,dm_stat,hln_stat,p_value,stars,n\n";
    json dm_json = json::array();
    for (std::size_t i = 0; i < codes.size(); ++i) {
        for (const auto& [model, r] : outputs[i].metrics)
            metrics << codes[i] << ',' << model << ',' << format_csv_number(r.mae) << ','
                    << format_csv_number(r.rmse) << ',' << format_csv_number(r.smape) << ','
                    << format_csv_number(r.r2) << ',' << r.n << '\n';
        for (const auto& e : outputs[i].dm) {
            dm_csv << codes[i] << ',' << e.model_a << ',' << e.model_b << ','
                   << format_csv_number(e.result.d_bar) << ','
                   << format_csv_number(e.result.dm_stat) << ','
                   << format_csv_number(e.result.hln_stat) << ','
                   << format_csv_number(e.result.p_value) << ',' << e.result.stars << ','
                   << e.result.n << '\n';
            dm_json.push_back({{"zone", codes[i]},
                               {"model_a", e.model_a},
                               {"model_b", e.model_b},
                               {"d_bar", e.result.d_bar},
                               {"dm_stat", e.result.dm_stat},
                               {"hln_stat", e.result.hln_stat},
                               {"p_value", e.result.p_value},
                               {"stars", e.result.stars},
                               {"degenerate", e.result.degenerate},
                               {"n", e.result.n}});
        }
        for (const auto& [model, doc] : outputs[i].model_documents) {
            atomic_write_file(model_path(config, model, codes[i]), doc);
            files.push_back(model_path(config, model, codes[i]));
        }
        for (const auto& [model, doc] : outputs[i].forecast_documents) {
            atomic_write_file(forecast_path(config, model, codes[i]), doc);
            files.push_back(forecast_path(config, model, codes[i]));
        }
        if (!outputs[i].training_log.empty()) {
            const std::string path = out_path(config, "gbdt_training_log_" + codes[i] + ".csv");
            atomic_write_file(path, outputs[i].training_log);
            files.push_back(path);
        }
    }
    atomic_write_file(out_path(config, "metrics.csv"), metrics.str());
    files.push_back(out_path(config, "metrics.csv"));
    json metrics_json = json::array();
    for (std::size_t i = 0; i < codes.size(); ++i)
        for (const auto& [model, r] : outputs[i].metrics)
            metrics_json.push_back({{"zone", codes[i]},
                                    {"model", model},
                                    {"split", "test"},
                                    {"mae", r.mae},
                                    {"rmse", r.rmse},
                                    {"smape", r.smape},
                                    {"r2", r.r2},
                                    {"n", r.n}});
    atomic_write_file(out_path(config, "metrics.json"), metrics_json.dump(2));
    files.push_back(out_path(config, "metrics.json"));
    atomic_write_file(out_path(config, "dm_tests.csv"), dm_csv.str());
    files.push_back(out_path(config, "dm_tests.csv"));
    json dm_doc;
    dm_doc["convention"] = "negative dm_stat means model_a is more accurate";
    dm_doc["horizon"] = 24;
    dm_doc["bandwidth"] = 23;
    dm_doc["results"] = std::move(dm_json);
    atomic_write_file(out_path(config, "dm_tests.json"), dm_doc.dump(2));
    files.push_back(out_path(config, "dm_tests.json"));
    write_resolved_config(config);
    files.push_back(out_path(config, "config_resolved.json"));
    record_manifest(config, "run", files, timer.elapsed_ms());
    return 0;
}

namespace {

struct BacktestZoneOutput {
    BacktestResult result;
};

BacktestZoneOutput backtest_zone(const ExperimentConfig& config, const std::string& code) {
    const ZoneData data = load_zone(config, code);
    auto models = build_roster(config, config.seed);

    if (config.backtest.refit_mode == RefitMode::FrozenModel) {
        for (auto& model : models) {
            if (auto* gbdt = dynamic_cast<GBDTForecaster*>(model.get())) {
                const std::string path = model_path(config, "gbdt", code);
                if (!fs::exists(path))
                    throw DataError("missing trained model '" + path +
                                    "'; run `epf run` first");
                gbdt->set_model(gbdt_from_json(read_text_file(path)));
            } else if (auto* ridge = dynamic_cast<RidgeForecaster*>(model.get())) {
                const std::string path = model_path(config, "ridge", code);
                if (!fs::exists(path))
                    throw DataError("missing trained model '" + path +
                                    "'; run `epf run` first");
                ridge->set_model(ridge_from_json(read_text_file(path)));
            }
        }
    }

    std::vector<Forecaster*> raw;
    for (auto& m : models) raw.push_back(m.get());
    const std::string reference = "naive-24h";
    if (std::find(config.roster.begin(), config.roster.end(), reference) ==
        config.roster.end())
        throw ConfigError("backtest reference 'naive-24h' is not in the roster");
    BacktestZoneOutput out;
    out.result = rolling_backtest(data.matrix, data.rows.test, config.backtest, raw, reference);
    return out;
}

}  // namespace

int cmd_backtest(const ExperimentConfig& config) {
    StageTimer timer;
    const auto codes = config.zone_codes();
    std::vector<BacktestZoneOutput> outputs(codes.size());
    parallel_apply(codes.size(), config.jobs, [&](std::size_t i) {
        outputs[i] = backtest_zone(config, codes[i]);
        log_info("backtested " + codes[i]);
    });

    std::ostringstream csv;
    csv << "zone,week,model,mae,win,tie,refit_mode\n";
    json summary = json::object();
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const auto& result = outputs[i].result;
        for (const auto& row : result.rows)
            csv << codes[i] << ',' << row.week << ',' << row.model << ','
                << format_csv_number(row.mae) << ',' << (row.win ? 1 : 0) << ','
                << (row.tie ? 1 : 0) << ',' << to_string(result.refit_mode) << '\n';

        json zone_summary;
        zone_summary["refit_mode"] = to_string(result.refit_mode);
        zone_summary["reference"] = result.reference;
        zone_summary["truncated_final_step"] = result.truncated_final_step;
        std::map<std::string, std::vector<double>> per_model_mae;
        std::map<std::string, std::vector<double>> ref_mae_by_week;
        for (const auto& row : result.rows) per_model_mae[row.model].push_back(row.mae);
        for (const auto& row : result.rows)
            if (row.model == result.reference) ref_mae_by_week["ref"].push_back(row.mae);
        const auto& ref = ref_mae_by_week["ref"];
        json models_json = json::object();
        for (const auto& [model, maes] : per_model_mae) {
            json mj;
            mj["wins"] = result.wins(model);
            mj["steps"] = maes.size();
            mj["win_rate"] = maes.empty() ? 0.0
                                          : static_cast<double>(result.wins(model)) /
                                                static_cast<double>(maes.size());
            double mean = 0.0;
            for (double v : maes) mean += v;
            mj["mean_weekly_mae"] = mean / static_cast<double>(maes.size());
            json quarters = json::array();
            for (int q = 0; q < 4; ++q) {
                double acc = 0.0;
                int cnt = 0;
                for (std::size_t w = 0; w < maes.size(); ++w)
                    if (static_cast<int>(w) / 13 == q) {
                        acc += maes[w];
                        ++cnt;
                    }
                quarters.push_back(cnt ? acc / cnt : 0.0);
            }
            mj["quarterly_mean_mae"] = std::move(quarters);
            if (model != result.reference && ref.size() == maes.size()) {
                std::vector<double> reduction(maes.size());
                for (std::size_t w = 0; w < maes.size(); ++w)
                    reduction[w] = ref[w] > 0.0 ? (ref[w] - maes[w]) / ref[w] * 100.0 : 0.0;
                std::sort(reduction.begin(), reduction.end());
                mj["weekly_mae_reduction_cdf"] = reduction;
            }
            models_json[model] = std::move(mj);
        }
        zone_summary["models"] = std::move(models_json);
        summary[codes[i]] = std::move(zone_summary);
    }
    std::vector<std::string> files;
    atomic_write_file(out_path(config, "backtest.csv"), csv.str());
    files.push_back(out_path(config, "backtest.csv"));
    atomic_write_file(out_path(config, "backtest_summary.json"), summary.dump(2));
    files.push_back(out_path(config, "backtest_summary.json"));
    record_manifest(config, "backtest", files, timer.elapsed_ms());
    return 0;
}

int cmd_windows(const ExperimentConfig& config) {
    StageTimer timer;
    if (config.windows.empty())
        throw ConfigError("no training windows configured under analysis.windows");
    const auto codes = config.zone_codes();
    std::vector<std::vector<WindowResult>> outputs(codes.size());
    parallel_apply(codes.size(), config.jobs, [&](std::size_t i) {
        const ZoneData data = load_zone(config, codes[i]);
        GBDTConfig g = config.gbdt;
        g.seed = config.seed;
        outputs[i] =
            window_experiment(data.matrix, config.windows, data.rows.val, data.rows.test, g);
        log_info("window experiment done for " + codes[i]);
    });

    std::ostringstream csv;
    csv << "zone,window,train_begin,train_end,mae,rmse,smape,r2,best_round\n";
    for (std::size_t i = 0; i < codes.size(); ++i)
        for (const auto& r : outputs[i])
            csv << codes[i] << ',' << r.window << ',' << format_utc_timestamp(r.begin) << ','
                << format_utc_timestamp(r.end) << ',' << format_csv_number(r.metrics.mae)
                << ',' << format_csv_number(r.metrics.rmse) << ','
                << format_csv_number(r.metrics.smape) << ','
                << format_csv_number(r.metrics.r2) << ',' << r.best_round << '\n';
    std::vector<std::string> files;
    atomic_write_file(out_path(config, "windows.csv"), csv.str());
    files.push_back(out_path(config, "windows.csv"));
    record_manifest(config, "windows", files, timer.elapsed_ms());
    return 0;
}

namespace {

struct AblateZoneOutput {
    MetricReport full;
    std::vector<AblationRow> logo;
    std::vector<AblationRow> groups;
    std::string lags_calendar_forecast;  // CSV reused by cmd_regimes
};

AblateZoneOutput ablate_zone(const ExperimentConfig& config, const std::string& code) {
    const ZoneData data = load_zone(config, code);
    const std::string path = model_path(config, "gbdt", code);
    if (!fs::exists(path))
        throw DataError("missing trained model '" + path + "'; run `epf run` first");
    const GBDTModel full_model = gbdt_from_json(read_text_file(path));

    const auto test_pred = read_forecast_csv(forecast_path(config, "gbdt", code), data.matrix,
                                             data.rows.test, "run");
    AblateZoneOutput out;
    out.full = metric_report(
        {data.matrix.target.data() + data.rows.test.begin, data.rows.test.size()}, test_pred);

    GBDTConfig g = config.gbdt;
    g.seed = config.seed;
    out.logo = logo_ablation(data.matrix, data.rows, full_model.best_round, g, out.full);
    out.groups = group_only(data.matrix, data.rows, full_model.best_round, g, out.full);

    // Recover the lags+calendar forecast for the regime analysis.
    const auto mask = group_mask_keep(data.matrix,
                                      {FeatureGroup::Lags, FeatureGroup::Calendar});
    const auto pred = fixed_round_forecast(data.matrix, data.rows, mask.column_indices,
                                           full_model.best_round, g);
    out.lags_calendar_forecast = forecast_csv(data.matrix, data.rows.test, pred);
    return out;
}

}  // namespace

int cmd_ablate(const ExperimentConfig& config) {
    StageTimer timer;
    const auto codes = config.zone_codes();
    std::vector<AblateZoneOutput> outputs(codes.size());
    parallel_apply(codes.size(), config.jobs, [&](std::size_t i) {
        outputs[i] = ablate_zone(config, codes[i]);
        log_info("ablation done for " + codes[i]);
    });

    std::ostringstream csv;
    csv << "zone,experiment,variant,mae,r2,delta_mae,delta_r2\n";
    std::vector<std::string> files;
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const auto& out = outputs[i];
        csv << codes[i] << ",logo,full," << format_csv_number(out.full.mae) << ','
            << format_csv_number(out.full.r2) << ",0,0\n";
        for (const auto& row : out.logo)
            csv << codes[i] << ",logo," << row.variant << ',' << format_csv_number(row.mae)
                << ',' << format_csv_number(row.r2) << ',' << format_csv_number(row.delta_mae)
                << ',' << format_csv_number(row.delta_r2) << '\n';
        for (const auto& row : out.groups)
            csv << codes[i] << ",group-only," << row.variant << ','
                << format_csv_number(row.mae) << ',' << format_csv_number(row.r2) << ','
                << format_csv_number(row.delta_mae) << ',' << format_csv_number(row.delta_r2)
                << '\n';
        const std::string fpath = forecast_path(config, "lags-plus-calendar", codes[i]);
        atomic_write_file(fpath, out.lags_calendar_forecast);
        files.push_back(fpath);
    }
    atomic_write_file(out_path(config, "ablation.csv"), csv.str());
    files.push_back(out_path(config, "ablation.csv"));
    record_manifest(config, "ablate", files, timer.elapsed_ms());
    return 0;
}

namespace {

struct RegimeZoneOutput {
    RegimeReport report;
    std::string reservoir_column;
    std::string ttf_column;
};

RegimeZoneOutput regimes_zone(const ExperimentConfig& config, const std::string& code) {
    const ZoneData data = load_zone(config, code);
    const auto [res_col, gas_col] = regime_columns(config, data.matrix);

    std::map<std::string, std::vector<double>> forecasts;
    forecasts["full"] = read_forecast_csv(forecast_path(config, "gbdt", code), data.matrix,
                                          data.rows.test, "run");
    forecasts["lags+calendar"] = read_forecast_csv(
        forecast_path(config, "lags-plus-calendar", code), data.matrix, data.rows.test,
        "ablate");

    const auto labels = regime_partition(column_over(data.matrix, res_col, data.rows.test),
                                         column_over(data.matrix, gas_col, data.rows.test));
    RegimeZoneOutput out;
    out.report = regime_metrics(
        labels,
        {data.matrix.target.data() + data.rows.test.begin, data.rows.test.size()}, forecasts);
    out.reservoir_column = res_col;
    out.ttf_column = gas_col;
    return out;
}

}  // namespace

int cmd_regimes(const ExperimentConfig& config) {
    StageTimer timer;
    const auto codes = config.zone_codes();
    std::vector<RegimeZoneOutput> outputs(codes.size());
    parallel_apply(codes.size(), config.jobs, [&](std::size_t i) {
        outputs[i] = regimes_zone(config, codes[i]);
        log_info("regime analysis done for " + codes[i]);
    });

    std::ostringstream csv;
    csv << "zone,model,cell,smape,rmse,n\n";
    json summary = json::object();
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const auto& out = outputs[i];
        json zone_json;
        zone_json["reservoir_scope"] = "zone-local";
        zone_json["reservoir_column"] = out.reservoir_column;
        zone_json["ttf_column"] = out.ttf_column;
        zone_json["reservoir_median"] = out.report.reservoir_median;
        zone_json["ttf_median"] = out.report.ttf_median;
        json models_json = json::object();
        for (const auto& [model, mr] : out.report.models) {
            for (const auto& [cell, cm] : mr.cells)
                csv << codes[i] << ',' << model << ',' << to_string(cell) << ','
                    << format_csv_number(cm.smape) << ',' << format_csv_number(cm.rmse) << ','
                    << cm.n << '\n';
            json mj;
            mj["marginal_reservoir"] = mr.marginal_reservoir;
            mj["marginal_gas"] = mr.marginal_gas;
            mj["incomplete_cells"] = mr.incomplete_cells;
            models_json[model] = std::move(mj);
        }
        zone_json["models"] = std::move(models_json);
        summary[codes[i]] = std::move(zone_json);
    }
    std::vector<std::string> files;
    atomic_write_file(out_path(config, "regimes.csv"), csv.str());
    files.push_back(out_path(config, "regimes.csv"));
    atomic_write_file(out_path(config, "regimes_summary.json"), summary.dump(2));
    files.push_back(out_path(config, "regimes_summary.json"));
    record_manifest(config, "regimes", files, timer.elapsed_ms());
    return 0;
}

int cmd_failures(const ExperimentConfig& config) {
    StageTimer timer;
    const auto codes = config.zone_codes();
    struct ZoneFailures {
        std::vector<FailureRecord> records;
        std::vector<std::string> state_names;
    };
    std::vector<ZoneFailures> outputs(codes.size());
    parallel_apply(codes.size(), config.jobs, [&](std::size_t i) {
        const ZoneData data = load_zone(config, codes[i]);
        const auto pred = read_forecast_csv(forecast_path(config, "gbdt", codes[i]),
                                            data.matrix, data.rows.test, "run");
        std::map<std::string, std::vector<double>> state;
        try {
            const auto [res_col, gas_col] = regime_columns(config, data.matrix);
            state[res_col] = column_over(data.matrix, res_col, data.rows.test);
            state[gas_col] = column_over(data.matrix, gas_col, data.rows.test);
        } catch (const DataError&) {
            // State diagnostics are best-effort; lag-24 alone is still useful.
        }
        if (data.matrix.find_column("price_lag24"))
            state["price_lag24"] = column_over(data.matrix, "price_lag24", data.rows.test);
        outputs[i].records =
            worst_errors(data.matrix, data.rows.test, pred, state, config.failures_k);
        for (const auto& [name, _] : state) outputs[i].state_names.push_back(name);
        log_info("failure extraction done for " + codes[i]);
    });

    std::ostringstream csv;
    csv << "zone,rank,timestamp,actual,forecast,abs_error,direction,weekday,hour_local";
    std::vector<std::string> state_names;
    for (const auto& out : outputs)
        for (const auto& n : out.state_names)
            if (std::find(state_names.begin(), state_names.end(), n) == state_names.end())
                state_names.push_back(n);
    std::sort(state_names.begin(), state_names.end());
    for (const auto& n : state_names) csv << ',' << n;
    csv << '\n';
    for (std::size_t i = 0; i < codes.size(); ++i) {
        int rank = 1;
        for (const auto& rec : outputs[i].records) {
            csv << codes[i] << ',' << rank++ << ',' << format_utc_timestamp(rec.timestamp)
                << ',' << format_csv_number(rec.actual) << ','
                << format_csv_number(rec.forecast) << ',' << format_csv_number(rec.abs_error)
                << ',' << (rec.under_prediction ? "under" : "over") << ',' << rec.weekday
                << ',' << rec.hour_of_day;
            for (const auto& n : state_names) {
                csv << ',';
                const auto it = rec.state.find(n);
                if (it != rec.state.end()) csv << format_csv_number(it->second);
            }
            csv << '\n';
        }
    }
    std::vector<std::string> files;
    atomic_write_file(out_path(config, "failures.csv"), csv.str());
    files.push_back(out_path(config, "failures.csv"));
    record_manifest(config, "failures", files, timer.elapsed_ms());
    return 0;
}

}  // namespace epf
