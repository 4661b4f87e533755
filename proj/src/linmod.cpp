#include "epf/linmod.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "epf/metrics.hpp"

namespace epf {

Standardizer Standardizer::fit(const DataSlice& train) {
    if (train.n == 0) throw std::invalid_argument("cannot standardize an empty slice");
    Standardizer s;
    const double n = static_cast<double>(train.n);
    s.mean.resize(train.num_columns());
    s.stddev.resize(train.num_columns());
    for (std::size_t c = 0; c < train.num_columns(); ++c) {
        double sum = 0.0;
        for (std::size_t i = 0; i < train.n; ++i) sum += train.cols[c][i];
        const double mean = sum / n;
        double ss = 0.0;
        for (std::size_t i = 0; i < train.n; ++i) {
            const double d = train.cols[c][i] - mean;
            ss += d * d;
        }
        const double sd = std::sqrt(ss / n);
        s.mean[c] = mean;
        s.stddev[c] = sd > 0.0 ? sd : 1.0;
    }
    double ysum = 0.0;
    for (std::size_t i = 0; i < train.n; ++i) ysum += train.y[i];
    s.target_mean = ysum / n;
    double yss = 0.0;
    for (std::size_t i = 0; i < train.n; ++i) {
        const double d = train.y[i] - s.target_mean;
        yss += d * d;
    }
    const double ysd = std::sqrt(yss / n);
    s.target_stddev = ysd > 0.0 ? ysd : 1.0;
    return s;
}

std::vector<double> ridge_solve(const DataSlice& X, std::span<const double> y,
                                double lambda) {
    if (y.size() != X.n)
        throw std::invalid_argument("target length does not match design matrix rows");
    if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
    const auto p = static_cast<Eigen::Index>(X.num_columns());
    const auto n = static_cast<Eigen::Index>(X.n);

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double* xj = X.cols[static_cast<std::size_t>(j)];
        for (Eigen::Index k = j; k < p; ++k) {
            const double* xk = X.cols[static_cast<std::size_t>(k)];
            double dot = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) dot += xj[i] * xk[i];
            A(j, k) = dot;
            A(k, j) = dot;
        }
        double dot = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) dot += xj[i] * y[static_cast<std::size_t>(i)];
        b(j) = dot;
    }
    A.diagonal().array() += lambda;

    const auto ldlt = A.ldlt();
    const Eigen::VectorXd w = ldlt.solve(b);
    const double resid = (A * w - b).norm();
    const double scale = b.norm() + 1.0;
    // A rank-deficient Gram matrix shows up as a (near-)zero LDLT pivot.
    const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
    const bool rank_deficient = p > 0 && d.minCoeff() <= 1e-12 * std::max(1.0, d.maxCoeff());
    if (!w.allFinite() || resid > 1e-6 * scale || (lambda == 0.0 && rank_deficient))
        throw std::runtime_error(
            "ridge normal equations are singular (collinear columns at lambda = 0)");
    return std::vector<double>(w.data(), w.data() + w.size());
}

RidgeModel RidgeModel::fit(const DataSlice& train, double lambda) {
    RidgeModel model;
    model.lambda = lambda;
    model.column_order = train.names;
    model.standardizer = Standardizer::fit(train);

    const auto& s = model.standardizer;
    std::vector<std::vector<double>> zcols(train.num_columns());
    DataSlice z;
    z.names = train.names;
    z.n = train.n;
    for (std::size_t c = 0; c < train.num_columns(); ++c) {
        zcols[c].resize(train.n);
        for (std::size_t i = 0; i < train.n; ++i)
            zcols[c][i] = (train.cols[c][i] - s.mean[c]) / s.stddev[c];
        z.cols.push_back(zcols[c].data());
    }
    std::vector<double> zy(train.n);
    for (std::size_t i = 0; i < train.n; ++i)
        zy[i] = (train.y[i] - s.target_mean) / s.target_stddev;

    model.weights = ridge_solve(z, zy, lambda);
    model.intercept = 0.0;  // both sides centered
    return model;
}

std::vector<double> RidgeModel::predict(const DataSlice& X) const {
    if (X.names != column_order)
        throw std::invalid_argument("feature columns do not match the training order");
    std::vector<double> out(X.n, intercept);
    for (std::size_t c = 0; c < X.num_columns(); ++c) {
        const double w = weights[c];
        const double mu = standardizer.mean[c];
        const double sd = standardizer.stddev[c];
        for (std::size_t i = 0; i < X.n; ++i) out[i] += w * (X.cols[c][i] - mu) / sd;
    }
    for (double& v : out) v = v * standardizer.target_stddev + standardizer.target_mean;
    return out;
}

std::vector<double> RidgeModel::raw_weights() const {
    std::vector<double> w(weights.size());
    for (std::size_t c = 0; c < weights.size(); ++c)
        w[c] = weights[c] * standardizer.target_stddev / standardizer.stddev[c];
    return w;
}

double RidgeModel::raw_intercept() const {
    double b = standardizer.target_mean + intercept * standardizer.target_stddev;
    const auto w = raw_weights();
    for (std::size_t c = 0; c < w.size(); ++c) b -= w[c] * standardizer.mean[c];
    return b;
}

double select_lambda(const DataSlice& train, const DataSlice& val,
                     std::vector<double> grid) {
    if (grid.empty()) throw std::invalid_argument("lambda grid is empty");
    if (val.n == 0) throw std::invalid_argument("lambda selection needs a validation set");
    std::sort(grid.begin(), grid.end());
    double best_lambda = grid.front();
    double best_mae = std::numeric_limits<double>::infinity();
    for (double lambda : grid) {
        const RidgeModel model = RidgeModel::fit(train, lambda);
        const auto pred = model.predict(val);
        const double m = mae(std::span(val.y, val.n), pred);
        if (m <= best_mae) {  // ties go to the larger lambda
            best_mae = m;
            best_lambda = lambda;
        }
    }
    return best_lambda;
}

RidgeModel fit_ridge_with_selection(const DataSlice& train, const DataSlice& val,
                                    std::vector<double> grid) {
    return RidgeModel::fit(train, select_lambda(train, val, std::move(grid)));
}

std::string ridge_to_json(const RidgeModel& model) {
    nlohmann::json j;
    j["format"] = "epf-ridge";
    j["version"] = 1;
    j["lambda"] = model.lambda;
    j["weights"] = model.weights;
    j["intercept"] = model.intercept;
    j["columns"] = model.column_order;
    j["standardizer"] = {{"mean", model.standardizer.mean},
                         {"stddev", model.standardizer.stddev},
                         {"target_mean", model.standardizer.target_mean},
                         {"target_stddev", model.standardizer.target_stddev}};
    return j.dump(2);
}

RidgeModel ridge_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "epf-ridge")
        throw std::invalid_argument("not a ridge model document");
    RidgeModel m;
    m.lambda = j.at("lambda").get<double>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.intercept = j.at("intercept").get<double>();
    m.column_order = j.at("columns").get<std::vector<std::string>>();
    const auto& s = j.at("standardizer");
    m.standardizer.mean = s.at("mean").get<std::vector<double>>();
    m.standardizer.stddev = s.at("stddev").get<std::vector<double>>();
    m.standardizer.target_mean = s.at("target_mean").get<double>();
    m.standardizer.target_stddev = s.at("target_stddev").get<double>();
    return m;
}

}  // namespace epf
