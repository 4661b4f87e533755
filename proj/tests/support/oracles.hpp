#pragma once

// Independent oracles used by the test suites. These deliberately avoid the
// code paths they check: the linear solver is plain Gaussian elimination
// rather than the library's decomposition, and the tree oracle searches raw
// values exhaustively instead of histogram bins.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace epf::testsupport {

// Solves (X'X + lambda*I) w = X'y by Gauss-Jordan with partial pivoting.
inline std::vector<double> ridge_normal_equation_oracle(
    const std::vector<std::vector<double>>& cols, const std::vector<double>& y,
    double lambda) {
    const std::size_t p = cols.size();
    const std::size_t n = y.size();
    std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t k = 0; k < p; ++k) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += cols[j][i] * cols[k][i];
            a[j][k] = dot;
        }
        a[j][j] += lambda;
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += cols[j][i] * y[i];
        a[j][p] = dot;
    }
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < p; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-12)
            throw std::runtime_error("oracle: singular normal equations");
        std::swap(a[col], a[pivot]);
        const double diag = a[col][col];
        for (std::size_t k = col; k <= p; ++k) a[col][k] /= diag;
        for (std::size_t r = 0; r < p; ++r) {
            if (r == col) continue;
            const double factor = a[r][col];
            for (std::size_t k = col; k <= p; ++k) a[r][k] -= factor * a[col][k];
        }
    }
    std::vector<double> w(p);
    for (std::size_t j = 0; j < p; ++j) w[j] = a[j][p];
    return w;
}

// Greedy CART regression stump search over raw feature values with the same
// gain rule (sign-gradient sums, count hessians) and median leaf values, but
// no histogram approximation. Recursive best-first growth to `max_leaves`.
class ExactCartOracle {
  public:
    ExactCartOracle(const std::vector<std::vector<double>>& cols,
                    const std::vector<double>& residuals, int max_leaves, double l2,
                    int min_samples)
        : cols_(cols), residuals_(residuals), max_leaves_(max_leaves), l2_(l2),
          min_samples_(min_samples) {}

    // Returns per-row predictions (unscaled leaf medians).
    std::vector<double> fit_predict() {
        std::vector<std::size_t> all(residuals_.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        std::vector<std::vector<std::size_t>> leaves{all};
        while (static_cast<int>(leaves.size()) < max_leaves_) {
            double best_gain = 0.0;
            std::size_t best_leaf = leaves.size();
            std::size_t best_feature = 0;
            double best_threshold = 0.0;
            for (std::size_t li = 0; li < leaves.size(); ++li) {
                double gain, threshold;
                std::size_t feature;
                if (best_split(leaves[li], &gain, &feature, &threshold) &&
                    gain > best_gain) {
                    best_gain = gain;
                    best_leaf = li;
                    best_feature = feature;
                    best_threshold = threshold;
                }
            }
            if (best_leaf == leaves.size()) break;
            std::vector<std::size_t> left, right;
            for (std::size_t i : leaves[best_leaf])
                (cols_[best_feature][i] <= best_threshold ? left : right).push_back(i);
            leaves[best_leaf] = std::move(left);
            leaves.push_back(std::move(right));
        }
        std::vector<double> pred(residuals_.size(), 0.0);
        for (const auto& leaf : leaves) {
            std::vector<double> vals;
            for (std::size_t i : leaf) vals.push_back(residuals_[i]);
            std::sort(vals.begin(), vals.end());
            const double median = vals.size() % 2 == 1
                                      ? vals[vals.size() / 2]
                                      : (vals[vals.size() / 2 - 1] + vals[vals.size() / 2]) / 2.0;
            for (std::size_t i : leaf) pred[i] = median;
        }
        return pred;
    }

  private:
    double objective(double grad_sum, std::size_t n) const {
        return grad_sum * grad_sum / (static_cast<double>(n) + l2_);
    }

    bool best_split(const std::vector<std::size_t>& rows, double* gain,
                    std::size_t* feature, double* threshold) const {
        *gain = 0.0;
        bool found = false;
        double total_grad = 0.0;
        for (std::size_t i : rows) total_grad += sign(residuals_[i]);
        const double parent = objective(total_grad, rows.size());
        for (std::size_t f = 0; f < cols_.size(); ++f) {
            std::vector<std::size_t> order = rows;
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return cols_[f][a] < cols_[f][b];
            });
            double left_grad = 0.0;
            for (std::size_t k = 0; k + 1 < order.size(); ++k) {
                left_grad += sign(residuals_[order[k]]);
                if (cols_[f][order[k]] == cols_[f][order[k + 1]]) continue;
                const std::size_t nl = k + 1;
                const std::size_t nr = order.size() - nl;
                if (nl < static_cast<std::size_t>(min_samples_) ||
                    nr < static_cast<std::size_t>(min_samples_))
                    continue;
                const double g = objective(left_grad, nl) +
                                 objective(total_grad - left_grad, nr) - parent;
                if (g > *gain) {
                    *gain = g;
                    *feature = f;
                    *threshold =
                        cols_[f][order[k]] + (cols_[f][order[k + 1]] - cols_[f][order[k]]) / 2.0;
                    found = true;
                }
            }
        }
        return found;
    }

    static double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

    const std::vector<std::vector<double>>& cols_;
    const std::vector<double>& residuals_;
    int max_leaves_;
    double l2_;
    int min_samples_;
};

}  // namespace epf::testsupport
