#pragma once

#include <span>
#include <string>
#include <vector>

#include "epf/features.hpp"

namespace epf {

// Per-column train moments. Zero-variance columns get a unit divisor so
// standardization never divides by zero.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stddev;
    double target_mean = 0.0;
    double target_stddev = 1.0;

    static Standardizer fit(const DataSlice& train);
};

// Exact solve of (X'X + lambda*I) w = X'y on the inputs as given; no
// centering, no intercept. Throws when the lambda = 0 system is singular.
std::vector<double> ridge_solve(const DataSlice& X, std::span<const double> y,
                                double lambda);

inline const std::vector<double> kDefaultLambdaGrid = {0.1, 1.0, 10.0, 100.0};

struct RidgeModel {
    std::vector<double> weights;  // on the standardized scale
    double intercept = 0.0;       // standardized scale (zero after centering)
    double lambda = 0.0;
    Standardizer standardizer;
    std::vector<std::string> column_order;

    static RidgeModel fit(const DataSlice& train, double lambda);

    // Standardize, apply weights, inverse-transform back to EUR/MWh. Throws
    // on column-name mismatch with the training order.
    std::vector<double> predict(const DataSlice& X) const;

    // Equivalent weights/intercept on the raw feature scale.
    std::vector<double> raw_weights() const;
    double raw_intercept() const;
};

// Validation-MAE selection over the grid; ties break toward larger lambda.
// Throws on an empty grid or empty validation slice.
double select_lambda(const DataSlice& train, const DataSlice& val,
                     std::vector<double> grid = kDefaultLambdaGrid);

RidgeModel fit_ridge_with_selection(const DataSlice& train, const DataSlice& val,
                                    std::vector<double> grid = kDefaultLambdaGrid);

std::string ridge_to_json(const RidgeModel& model);
RidgeModel ridge_from_json(const std::string& text);

}  // namespace epf
