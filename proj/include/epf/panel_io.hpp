#pragma once

#include <map>
#include <string>
#include <vector>

#include "epf/features.hpp"
#include "epf/panel.hpp"

namespace epf {

// Declared layout of a zone snapshot CSV: per-column frequency, availability,
// unit, plus which column is the target price.
struct ZoneSchema {
    ZoneId zone = ZoneId::NO1;
    std::string target_column = "price";
    std::map<std::string, ColumnMeta> columns;

    static ZoneSchema from_json(const std::string& text);
    std::string to_json() const;
};

struct IngestReport {
    std::string zone;
    std::size_t rows = 0;
    UtcSeconds start = 0;
    UtcSeconds end = 0;
    std::vector<std::string> leakage_removed;
    std::vector<SparseDrop> sparse_dropped;
    std::map<std::string, FillCounts> fill_counts;
    UtcSeconds warmup_begin = 0;
    UtcSeconds warmup_end = 0;  // first 168 hours, excluded from modelling
    DescriptiveStats target_stats;
};

// Full preprocessing pipeline for one zone snapshot: master hourly index from
// the target span, forward-fill alignment of every exogenous series, leakage
// filtering, sparse-column dropping, forward-then-back gap filling.
HourlyPanel ingest_zone(const std::string& csv_path, const ZoneSchema& schema,
                        IngestReport* report = nullptr, double sparse_threshold = 0.5);

// Finalized-panel persistence: CSV plus a JSON sidecar with column metadata.
void write_panel(const HourlyPanel& panel, const std::string& csv_path,
                 const std::string& meta_path);
HourlyPanel read_panel(const std::string& csv_path, const std::string& meta_path);

std::string ingest_report_to_json(const std::vector<IngestReport>& reports);

// Feature-matrix export: CSV of target + features, JSON sidecar mapping every
// column to its group tag.
void write_feature_matrix(const FeatureMatrix& m, const std::string& csv_path,
                          const std::string& sidecar_path);

}  // namespace epf
