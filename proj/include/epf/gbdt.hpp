#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "epf/features.hpp"

namespace epf {

struct GBDTConfig {
    int num_leaves = 63;
    double learning_rate = 0.05;
    double row_subsample = 0.8;
    double column_subsample = 0.8;
    double l2_leaf_penalty = 1.0;
    int max_rounds = 1000;
    int early_stopping_patience = 50;
    bool early_stopping = true;  // false trains exactly max_rounds (fixed-round retrains)
    int histogram_bins = 255;
    int min_samples_per_leaf = 20;
    std::uint64_t seed = 0;

    void validate() const;
};

// Per-feature quantile boundaries. Bin b holds values in (edges[b-1],
// edges[b]]; values above the last edge fall in the final bin, so a feature
// with E edges has E+1 bins and every stored edge is a candidate threshold.
struct BinEdges {
    std::vector<std::vector<double>> edges;

    std::size_t num_features() const { return edges.size(); }
    int bin_count(std::size_t feature) const {
        return static_cast<int>(edges[feature].size()) + 1;
    }
    int bin_of(std::size_t feature, double value) const;
};

BinEdges build_bins(const DataSlice& train, int bins);

// Flat node array; node 0 is the root. Leaves have feature = -1 and carry the
// EUR/MWh increment in `value`.
struct TreeNode {
    int feature = -1;
    int bin = -1;            // split: go left when bin(x) <= bin
    double threshold = 0.0;  // same split on raw values: left when x <= threshold
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;

    int num_leaves() const;
    double predict_row(const DataSlice& X, std::size_t row) const;
};

struct GBDTModel {
    double base_score = 0.0;
    std::vector<Tree> trees;
    int best_round = 0;  // tree count of the validation-optimal prefix
    GBDTConfig config;
    BinEdges bins;
    std::vector<std::string> column_order;
    std::vector<double> train_mae_log;  // one entry per trained round
    std::vector<double> val_mae_log;

    // Base score plus the first `rounds` trees; rounds < 0 means best_round.
    // Throws on column mismatch or rounds > stored tree count.
    std::vector<double> predict(const DataSlice& X, int rounds = -1) const;
};

// Internal training inputs for one tree: sign gradients and raw residuals on
// the full training slice plus the sampled row/column index sets.
struct TreeGrowInput {
    const std::vector<std::vector<std::uint16_t>>* binned = nullptr;
    const BinEdges* bins = nullptr;
    std::span<const double> gradients;
    std::span<const double> residuals;
    std::vector<std::uint32_t> rows;      // sampled row indices, ascending
    std::vector<std::uint32_t> features;  // sampled feature indices, ascending
};

// Leaf-wise growth: repeatedly split the highest-gain leaf until num_leaves
// or no strictly positive gain remains. Leaf values are in-leaf residual
// medians scaled by the learning rate.
Tree grow_tree(const TreeGrowInput& input, const GBDTConfig& config);

// Boosting loop with row/column subsampling and validation-MAE early
// stopping. Throws on an empty validation slice.
GBDTModel gbdt_fit(const DataSlice& train, const DataSlice& val, const GBDTConfig& config);

std::string gbdt_to_json(const GBDTModel& model);
GBDTModel gbdt_from_json(const std::string& text);

}  // namespace epf
