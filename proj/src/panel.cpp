#include "epf/panel.hpp"

#include <algorithm>
#include <stdexcept>

namespace epf {

const std::vector<ZoneId>& all_zones() {
    static const std::vector<ZoneId> zones = {ZoneId::NO1, ZoneId::NO2, ZoneId::NO3,
                                              ZoneId::NO4, ZoneId::NO5};
    return zones;
}

std::string to_string(ZoneId zone) {
    switch (zone) {
        case ZoneId::NO1: return "NO1";
        case ZoneId::NO2: return "NO2";
        case ZoneId::NO3: return "NO3";
        case ZoneId::NO4: return "NO4";
        case ZoneId::NO5: return "NO5";
    }
    throw std::invalid_argument("invalid ZoneId");
}

ZoneId zone_from_string(const std::string& s) {
    for (ZoneId z : all_zones())
        if (to_string(z) == s) return z;
    throw std::invalid_argument("unknown bidding zone: '" + s + "'");
}

std::string to_string(Frequency f) {
    switch (f) {
        case Frequency::Hourly: return "hourly";
        case Frequency::Daily: return "daily";
        case Frequency::Weekly: return "weekly";
    }
    throw std::invalid_argument("invalid Frequency");
}

Frequency frequency_from_string(const std::string& s) {
    if (s == "hourly") return Frequency::Hourly;
    if (s == "daily") return Frequency::Daily;
    if (s == "weekly") return Frequency::Weekly;
    throw std::invalid_argument("unknown frequency: '" + s + "'");
}

std::string to_string(Availability a) {
    return a == Availability::DayAhead ? "day-ahead" : "post-delivery";
}

Availability availability_from_string(const std::string& s) {
    if (s == "day-ahead") return Availability::DayAhead;
    if (s == "post-delivery") return Availability::PostDelivery;
    throw std::invalid_argument("unknown availability: '" + s + "'");
}

void RawSeries::validate() const {
    if (timestamps.empty())
        throw std::invalid_argument("series '" + name + "' is empty");
    if (timestamps.size() != values.size())
        throw std::invalid_argument("series '" + name + "' has mismatched lengths");
    for (std::size_t i = 1; i < timestamps.size(); ++i)
        if (timestamps[i] <= timestamps[i - 1])
            throw std::invalid_argument("series '" + name +
                                        "' timestamps not strictly increasing");
}

std::optional<std::size_t> HourlyIndex::position(UtcSeconds t) const {
    if (t < start) return std::nullopt;
    const std::int64_t off = t - start;
    if (off % kSecondsPerHour != 0) return std::nullopt;
    const auto i = static_cast<std::size_t>(off / kSecondsPerHour);
    if (i >= size) return std::nullopt;
    return i;
}

HourlyIndex build_hourly_index(UtcSeconds start, UtcSeconds end) {
    if (start % kSecondsPerHour != 0 || end % kSecondsPerHour != 0)
        throw std::invalid_argument("index bounds must be hour-aligned UTC");
    if (start >= end)
        throw std::invalid_argument("index start must precede end");
    HourlyIndex idx;
    idx.start = start;
    idx.size = static_cast<std::size_t>((end - start) / kSecondsPerHour);
    return idx;
}

std::optional<std::size_t> HourlyPanel::find_column(const std::string& name) const {
    for (std::size_t i = 0; i < column_names.size(); ++i)
        if (column_names[i] == name) return i;
    return std::nullopt;
}

void HourlyPanel::add_column(std::string name, std::vector<double> values,
                             ColumnMeta meta) {
    if (values.size() != index.size)
        throw std::invalid_argument("column '" + name + "' length " +
                                    std::to_string(values.size()) +
                                    " does not match panel index " +
                                    std::to_string(index.size));
    if (find_column(name))
        throw std::invalid_argument("duplicate column '" + name + "'");
    column_names.push_back(std::move(name));
    columns.push_back(std::move(values));
    column_meta.push_back(std::move(meta));
}

void HourlyPanel::validate() const {
    if (target.size() != index.size)
        throw std::invalid_argument("target length does not match index");
    if (columns.size() != column_names.size() || columns.size() != column_meta.size())
        throw std::invalid_argument("column bookkeeping out of sync");
    for (std::size_t c = 0; c < columns.size(); ++c)
        if (columns[c].size() != index.size)
            throw std::invalid_argument("column '" + column_names[c] +
                                        "' length does not match index");
}

std::vector<double> align_forward_fill(const RawSeries& series, const HourlyIndex& index) {
    series.validate();
    if (series.timestamps.front() >= index.end())
        throw std::invalid_argument("series '" + series.name +
                                    "' does not overlap the hourly index");
    std::vector<double> out(index.size, missing_value());
    std::size_t j = 0;  // first observation with timestamp > hour
    for (std::size_t i = 0; i < index.size; ++i) {
        const UtcSeconds hour = index.at(i);
        while (j < series.timestamps.size() && series.timestamps[j] <= hour) ++j;
        if (j > 0) out[i] = series.values[j - 1];
    }
    return out;
}

HourlyPanel leakage_filter(const HourlyPanel& panel, std::vector<std::string>* removed) {
    HourlyPanel out;
    out.zone = panel.zone;
    out.index = panel.index;
    out.target = panel.target;
    for (std::size_t c = 0; c < panel.num_columns(); ++c) {
        if (panel.column_meta[c].availability == Availability::PostDelivery) {
            if (removed) removed->push_back(panel.column_names[c]);
            continue;
        }
        out.column_names.push_back(panel.column_names[c]);
        out.columns.push_back(panel.columns[c]);
        out.column_meta.push_back(panel.column_meta[c]);
    }
    return out;
}

HourlyPanel drop_sparse_columns(const HourlyPanel& panel, double threshold,
                                std::vector<SparseDrop>* dropped) {
    if (!(threshold > 0.0 && threshold <= 1.0))
        throw std::invalid_argument("sparsity threshold must lie in (0, 1]");
    HourlyPanel out;
    out.zone = panel.zone;
    out.index = panel.index;
    out.target = panel.target;
    const double n = static_cast<double>(panel.rows());
    for (std::size_t c = 0; c < panel.num_columns(); ++c) {
        const auto missing = static_cast<double>(
            std::count_if(panel.columns[c].begin(), panel.columns[c].end(),
                          [](double v) { return is_missing(v); }));
        const double frac = n > 0 ? missing / n : 0.0;
        if (frac > threshold) {
            if (dropped) dropped->push_back({panel.column_names[c], frac});
            continue;
        }
        out.column_names.push_back(panel.column_names[c]);
        out.columns.push_back(panel.columns[c]);
        out.column_meta.push_back(panel.column_meta[c]);
    }
    return out;
}

namespace {

FillCounts fill_forward_then_back(std::vector<double>& v, const std::string& name) {
    FillCounts counts;
    double last = missing_value();
    for (double& x : v) {
        if (is_missing(x)) {
            if (!is_missing(last)) {
                x = last;
                ++counts.forward;
            }
        } else {
            last = x;
        }
    }
    if (is_missing(last))
        throw std::runtime_error("column '" + name + "' is entirely missing and cannot be filled");
    // Only a leading gap can remain after the forward pass.
    double next = missing_value();
    for (auto it = v.rbegin(); it != v.rend(); ++it) {
        if (is_missing(*it)) {
            *it = next;
            ++counts.backward;
        } else {
            next = *it;
        }
    }
    return counts;
}

}  // namespace

HourlyPanel fill_edges(const HourlyPanel& panel, std::map<std::string, FillCounts>* counts) {
    HourlyPanel out = panel;
    {
        FillCounts c = fill_forward_then_back(out.target, "target");
        if (counts && (c.forward || c.backward)) (*counts)["target"] = c;
    }
    for (std::size_t i = 0; i < out.num_columns(); ++i) {
        FillCounts c = fill_forward_then_back(out.columns[i], out.column_names[i]);
        if (counts && (c.forward || c.backward)) (*counts)[out.column_names[i]] = c;
    }
    return out;
}

DescriptiveStats descriptive_stats(const HourlyPanel& panel) {
    std::vector<double> vals;
    std::vector<UtcSeconds> hours;
    vals.reserve(panel.rows());
    for (std::size_t i = 0; i < panel.rows(); ++i) {
        if (!is_missing(panel.target[i])) {
            vals.push_back(panel.target[i]);
            hours.push_back(panel.index.at(i));
        }
    }
    if (vals.size() < 4)
        throw std::invalid_argument("descriptive_stats needs at least 4 observations");

    DescriptiveStats s;
    s.n = vals.size();
    const double n = static_cast<double>(vals.size());
    double sum = 0.0;
    for (double v : vals) sum += v;
    s.mean = sum / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    std::size_t neg = 0;
    for (double v : vals) {
        const double d = v - s.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        if (v < 0.0) ++neg;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    s.stddev = std::sqrt(m2);
    s.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    s.kurtosis = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;
    s.negative_share = static_cast<double>(neg) / n;

    std::map<int, std::pair<double, std::size_t>> annual;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        const int year = civil_from_utc(hours[i]).date.year;
        auto& [acc, cnt] = annual[year];
        acc += vals[i];
        ++cnt;
    }
    for (const auto& [year, acc] : annual)
        s.annual_means[year] = acc.first / static_cast<double>(acc.second);
    return s;
}

}  // namespace epf
