#include "epf/forecasters.hpp"

#include <stdexcept>

namespace epf {

NaiveForecaster::NaiveForecaster(int horizon_hours) : horizon_hours_(horizon_hours) {
    if (horizon_hours < 1) throw std::invalid_argument("naive horizon must be positive");
}

std::string NaiveForecaster::name() const {
    return "naive-" + std::to_string(horizon_hours_) + "h";
}

std::vector<double> NaiveForecaster::predict(const FeatureMatrix& m,
                                             const RowRange& rows) const {
    if (rows.end > m.rows()) throw std::invalid_argument("row range outside the matrix");
    const auto h = static_cast<std::size_t>(horizon_hours_);
    if (rows.begin < h)
        throw std::invalid_argument("naive forecast needs " + std::to_string(horizon_hours_) +
                                    " hours of history before the first row");
    std::vector<double> out(rows.size());
    for (std::size_t r = rows.begin; r < rows.end; ++r)
        out[r - rows.begin] = m.target[r - h];
    return out;
}

RidgeForecaster::RidgeForecaster(std::vector<double> lambda_grid,
                                 std::vector<std::size_t> columns)
    : grid_(std::move(lambda_grid)), columns_(std::move(columns)) {}

void RidgeForecaster::fit(const FeatureMatrix& m, const RowRange& train,
                          const RowRange& val) {
    const auto cols = columns_.empty() ? group_mask_exclude(m, std::nullopt).column_indices
                                       : columns_;
    model_ = fit_ridge_with_selection(slice(m, train, cols), slice(m, val, cols), grid_);
}

std::vector<double> RidgeForecaster::predict(const FeatureMatrix& m,
                                             const RowRange& rows) const {
    const auto& model = this->model();
    // Recover the training columns by name so prediction works on any matrix
    // with the same schema.
    std::vector<std::size_t> cols;
    for (const auto& name : model.column_order) {
        const auto idx = m.find_column(name);
        if (!idx) throw std::invalid_argument("matrix lacks trained column '" + name + "'");
        cols.push_back(*idx);
    }
    return model.predict(slice(m, rows, cols));
}

const RidgeModel& RidgeForecaster::model() const {
    if (!model_) throw std::logic_error("ridge forecaster is not fitted");
    return *model_;
}

GBDTForecaster::GBDTForecaster(GBDTConfig config, std::vector<std::size_t> columns,
                               std::string name)
    : config_(config), columns_(std::move(columns)), name_(std::move(name)) {}

std::vector<std::size_t> GBDTForecaster::resolve_columns(const FeatureMatrix& m) const {
    if (!columns_.empty()) return columns_;
    return group_mask_exclude(m, std::nullopt).column_indices;
}

void GBDTForecaster::fit(const FeatureMatrix& m, const RowRange& train,
                         const RowRange& val) {
    const auto cols = resolve_columns(m);
    model_ = gbdt_fit(slice(m, train, cols), slice(m, val, cols), config_);
}

std::vector<double> GBDTForecaster::predict(const FeatureMatrix& m,
                                            const RowRange& rows) const {
    const auto& model = this->model();
    std::vector<std::size_t> cols;
    for (const auto& name : model.column_order) {
        const auto idx = m.find_column(name);
        if (!idx) throw std::invalid_argument("matrix lacks trained column '" + name + "'");
        cols.push_back(*idx);
    }
    return model.predict(slice(m, rows, cols));
}

const GBDTModel& GBDTForecaster::model() const {
    if (!model_) throw std::logic_error("gbdt forecaster is not fitted");
    return *model_;
}

}  // namespace epf
