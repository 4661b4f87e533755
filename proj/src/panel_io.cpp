#include "epf/panel_io.hpp"

#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "epf/csv.hpp"

namespace epf {

ZoneSchema ZoneSchema::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    ZoneSchema schema;
    schema.zone = zone_from_string(j.at("zone").get<std::string>());
    schema.target_column = j.value("target", "price");
    for (const auto& [name, meta] : j.at("columns").items()) {
        ColumnMeta cm;
        cm.frequency = frequency_from_string(meta.at("frequency").get<std::string>());
        cm.availability = availability_from_string(meta.at("availability").get<std::string>());
        cm.unit = meta.value("unit", "");
        cm.effective = meta.value("effective", "");
        schema.columns[name] = cm;
    }
    if (!schema.columns.count(schema.target_column))
        throw std::runtime_error("schema does not declare the target column '" +
                                 schema.target_column + "'");
    return schema;
}

std::string ZoneSchema::to_json() const {
    nlohmann::json j;
    j["zone"] = to_string(zone);
    j["target"] = target_column;
    nlohmann::json cols;
    for (const auto& [name, meta] : columns) {
        nlohmann::json m;
        m["frequency"] = to_string(meta.frequency);
        m["availability"] = to_string(meta.availability);
        if (!meta.unit.empty()) m["unit"] = meta.unit;
        if (!meta.effective.empty()) m["effective"] = meta.effective;
        cols[name] = std::move(m);
    }
    j["columns"] = std::move(cols);
    return j.dump(2);
}

HourlyPanel ingest_zone(const std::string& csv_path, const ZoneSchema& schema,
                        IngestReport* report, double sparse_threshold) {
    const CsvTable table = read_timestamp_csv(csv_path);

    std::size_t target_idx = table.column_names.size();
    for (std::size_t c = 0; c < table.column_names.size(); ++c) {
        if (!schema.columns.count(table.column_names[c]))
            throw std::runtime_error(csv_path + ": column '" + table.column_names[c] +
                                     "' is not declared in the schema");
        if (table.column_names[c] == schema.target_column) target_idx = c;
    }
    if (target_idx == table.column_names.size())
        throw std::runtime_error(csv_path + ": target column '" + schema.target_column +
                                 "' not present");

    // Master hourly index spans the target observations.
    UtcSeconds first = 0, last = 0;
    bool seen = false;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        if (is_missing(table.columns[target_idx][r])) continue;
        if (!seen) first = table.timestamps[r];
        last = table.timestamps[r];
        seen = true;
    }
    if (!seen) throw std::runtime_error(csv_path + ": target column has no observations");
    if (first % kSecondsPerHour != 0 || last % kSecondsPerHour != 0)
        throw std::runtime_error(csv_path + ": target timestamps are not hour-aligned");

    HourlyPanel panel;
    panel.zone = schema.zone;
    panel.index = build_hourly_index(first, last + kSecondsPerHour);
    panel.target.assign(panel.index.size, missing_value());

    for (std::size_t r = 0; r < table.rows(); ++r) {
        if (is_missing(table.columns[target_idx][r])) continue;
        const auto pos = panel.index.position(table.timestamps[r]);
        if (!pos)
            throw std::runtime_error(csv_path + ": target timestamp " +
                                     format_utc_timestamp(table.timestamps[r]) +
                                     " is not hour-aligned to the master index");
        panel.target[*pos] = table.columns[target_idx][r];
    }

    for (std::size_t c = 0; c < table.column_names.size(); ++c) {
        if (c == target_idx) continue;
        RawSeries series;
        series.name = table.column_names[c];
        const ColumnMeta& meta = schema.columns.at(series.name);
        series.frequency = meta.frequency;
        series.availability = meta.availability;
        for (std::size_t r = 0; r < table.rows(); ++r) {
            if (is_missing(table.columns[c][r])) continue;
            series.timestamps.push_back(table.timestamps[r]);
            series.values.push_back(table.columns[c][r]);
        }
        if (series.timestamps.empty()) {
            // Entirely empty column: keep it as all-missing so the sparse
            // filter reports the drop.
            panel.add_column(series.name,
                             std::vector<double>(panel.index.size, missing_value()), meta);
            continue;
        }
        panel.add_column(series.name, align_forward_fill(series, panel.index), meta);
    }

    IngestReport rep;
    rep.zone = to_string(schema.zone);
    HourlyPanel filtered = leakage_filter(panel, &rep.leakage_removed);
    filtered = drop_sparse_columns(filtered, sparse_threshold, &rep.sparse_dropped);
    filtered = fill_edges(filtered, &rep.fill_counts);
    filtered.validate();

    rep.rows = filtered.rows();
    rep.start = filtered.index.start;
    rep.end = filtered.index.end();
    rep.warmup_begin = filtered.index.start;
    rep.warmup_end = filtered.index.at(std::min<std::size_t>(kHoursPerWeek, filtered.rows()));
    rep.target_stats = descriptive_stats(filtered);
    if (report) *report = std::move(rep);
    return filtered;
}

void write_panel(const HourlyPanel& panel, const std::string& csv_path,
                 const std::string& meta_path) {
    panel.validate();
    std::ostringstream csv;
    csv << "timestamp,price";
    for (const auto& name : panel.column_names) csv << ',' << name;
    csv << '\n';
    for (std::size_t r = 0; r < panel.rows(); ++r) {
        csv << format_utc_timestamp(panel.index.at(r)) << ','
            << format_csv_number(panel.target[r]);
        for (const auto& col : panel.columns) csv << ',' << format_csv_number(col[r]);
        csv << '\n';
    }
    atomic_write_file(csv_path, csv.str());

    nlohmann::json meta;
    meta["zone"] = to_string(panel.zone);
    meta["rows"] = panel.rows();
    meta["start"] = format_utc_timestamp(panel.index.start);
    nlohmann::json cols;
    for (std::size_t c = 0; c < panel.num_columns(); ++c) {
        cols[panel.column_names[c]] = {
            {"frequency", to_string(panel.column_meta[c].frequency)},
            {"availability", to_string(panel.column_meta[c].availability)},
            {"unit", panel.column_meta[c].unit},
            {"effective", panel.column_meta[c].effective}};
    }
    meta["columns"] = std::move(cols);
    atomic_write_file(meta_path, meta.dump(2));
}

HourlyPanel read_panel(const std::string& csv_path, const std::string& meta_path) {
    const CsvTable table = read_timestamp_csv(csv_path);
    const auto meta = nlohmann::json::parse(read_text_file(meta_path));

    if (table.column_names.empty() || table.column_names[0] != "price")
        throw std::runtime_error(csv_path + ": finalized panel must start with 'price'");

    HourlyPanel panel;
    panel.zone = zone_from_string(meta.at("zone").get<std::string>());
    panel.index = build_hourly_index(table.timestamps.front(),
                                     table.timestamps.back() + kSecondsPerHour);
    if (panel.index.size != table.rows())
        throw std::runtime_error(csv_path + ": finalized panel index has gaps");
    panel.target = table.columns[0];

    const auto& cols = meta.at("columns");
    for (std::size_t c = 1; c < table.column_names.size(); ++c) {
        const auto& name = table.column_names[c];
        if (!cols.contains(name))
            throw std::runtime_error(meta_path + ": missing metadata for column '" + name + "'");
        ColumnMeta cm;
        cm.frequency = frequency_from_string(cols[name].at("frequency").get<std::string>());
        cm.availability =
            availability_from_string(cols[name].at("availability").get<std::string>());
        cm.unit = cols[name].value("unit", "");
        cm.effective = cols[name].value("effective", "");
        panel.add_column(name, table.columns[c], cm);
    }
    panel.validate();
    return panel;
}

void write_feature_matrix(const FeatureMatrix& m, const std::string& csv_path,
                          const std::string& sidecar_path) {
    std::ostringstream csv;
    csv << "timestamp,price";
    for (const auto& name : m.names) csv << ',' << name;
    csv << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        csv << format_utc_timestamp(m.hour_at(r)) << ',' << format_csv_number(m.target[r]);
        for (const auto& col : m.cols) csv << ',' << format_csv_number(col[r]);
        csv << '\n';
    }
    atomic_write_file(csv_path, csv.str());

    nlohmann::json sidecar;
    sidecar["rows"] = m.rows();
    sidecar["start"] = format_utc_timestamp(m.start);
    nlohmann::json groups;
    for (std::size_t c = 0; c < m.num_columns(); ++c)
        groups[m.names[c]] = to_string(m.groups[c]);
    sidecar["group_of"] = std::move(groups);
    atomic_write_file(sidecar_path, sidecar.dump(2));
}

std::string ingest_report_to_json(const std::vector<IngestReport>& reports) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : reports) {
        nlohmann::json j;
        j["zone"] = r.zone;
        j["rows"] = r.rows;
        j["start"] = format_utc_timestamp(r.start);
        j["end"] = format_utc_timestamp(r.end);
        j["leakage_removed"] = r.leakage_removed;
        nlohmann::json sparse = nlohmann::json::array();
        for (const auto& d : r.sparse_dropped)
            sparse.push_back({{"column", d.name}, {"missing_fraction", d.missing_fraction}});
        j["sparse_dropped"] = std::move(sparse);
        nlohmann::json fills;
        for (const auto& [name, c] : r.fill_counts)
            fills[name] = {{"forward", c.forward}, {"backward", c.backward}};
        j["fill_counts"] = std::move(fills);
        j["warmup"] = {{"begin", format_utc_timestamp(r.warmup_begin)},
                       {"end", format_utc_timestamp(r.warmup_end)}};
        j["target_stats"] = {{"mean", r.target_stats.mean},
                             {"stddev", r.target_stats.stddev},
                             {"skewness", r.target_stats.skewness},
                             {"kurtosis", r.target_stats.kurtosis},
                             {"negative_share", r.target_stats.negative_share},
                             {"n", r.target_stats.n}};
        nlohmann::json annual;
        for (const auto& [year, mean] : r.target_stats.annual_means)
            annual[std::to_string(year)] = mean;
        j["target_stats"]["annual_means"] = std::move(annual);
        out.push_back(std::move(j));
    }
    return out.dump(2);
}

}  // namespace epf
