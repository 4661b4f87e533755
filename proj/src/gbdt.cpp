#include "epf/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace epf {

void GBDTConfig::validate() const {
    if (num_leaves < 2) throw std::invalid_argument("num_leaves must be at least 2");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0))
        throw std::invalid_argument("learning_rate must lie in (0, 1]");
    if (!(row_subsample > 0.0 && row_subsample <= 1.0) ||
        !(column_subsample > 0.0 && column_subsample <= 1.0))
        throw std::invalid_argument("subsample rates must lie in (0, 1]");
    if (l2_leaf_penalty < 0.0)
        throw std::invalid_argument("l2_leaf_penalty must be non-negative");
    if (max_rounds < 1) throw std::invalid_argument("max_rounds must be positive");
    if (early_stopping && early_stopping_patience < 1)
        throw std::invalid_argument("early_stopping_patience must be at least 1");
    if (histogram_bins < 2 || histogram_bins > 255)
        throw std::invalid_argument("histogram_bins must lie in [2, 255]");
    if (min_samples_per_leaf < 1)
        throw std::invalid_argument("min_samples_per_leaf must be positive");
}

int BinEdges::bin_of(std::size_t feature, double value) const {
    const auto& e = edges[feature];
    const auto it = std::lower_bound(e.begin(), e.end(), value);
    return static_cast<int>(it - e.begin());
}

BinEdges build_bins(const DataSlice& train, int bins) {
    if (bins < 2) throw std::invalid_argument("need at least 2 histogram bins");
    BinEdges out;
    out.edges.resize(train.num_columns());
    std::vector<double> sorted;
    for (std::size_t f = 0; f < train.num_columns(); ++f) {
        sorted.assign(train.cols[f], train.cols[f] + train.n);
        std::sort(sorted.begin(), sorted.end());
        auto& edges = out.edges[f];

        std::size_t distinct = sorted.empty() ? 0 : 1;
        for (std::size_t i = 1; i < sorted.size(); ++i)
            if (sorted[i] != sorted[i - 1]) ++distinct;

        if (distinct <= static_cast<std::size_t>(bins)) {
            for (std::size_t i = 1; i < sorted.size(); ++i)
                if (sorted[i] != sorted[i - 1])
                    edges.push_back(sorted[i - 1] + (sorted[i] - sorted[i - 1]) / 2.0);
        } else {
            // Rank cuts at k*n/bins; ties collapse buckets.
            const double step = static_cast<double>(sorted.size()) / bins;
            for (int k = 1; k < bins; ++k) {
                const auto pos = static_cast<std::size_t>(std::llround(k * step));
                if (pos == 0 || pos >= sorted.size()) continue;
                const double lo = sorted[pos - 1];
                const double hi = sorted[pos];
                if (lo < hi) {
                    const double edge = lo + (hi - lo) / 2.0;
                    if (edges.empty() || edge > edges.back()) edges.push_back(edge);
                }
            }
        }
    }
    return out;
}

int Tree::num_leaves() const {
    int count = 0;
    for (const auto& n : nodes)
        if (n.feature < 0) ++count;
    return count;
}

double Tree::predict_row(const DataSlice& X, std::size_t row) const {
    int node = 0;
    while (nodes[node].feature >= 0) {
        const double x = X.cols[static_cast<std::size_t>(nodes[node].feature)][row];
        node = x <= nodes[node].threshold ? nodes[node].left : nodes[node].right;
    }
    return nodes[node].value;
}

namespace {

// Per-leaf histogram: gradient sum and sample count per (feature, bin).
struct NodeHistogram {
    std::vector<double> grad;
    std::vector<std::uint32_t> count;

    void resize(std::size_t total_bins) {
        grad.assign(total_bins, 0.0);
        count.assign(total_bins, 0);
    }
};

struct CandidateSplit {
    double gain = 0.0;
    int feature = -1;  // index into the matrix columns
    int bin = -1;
    bool valid() const { return feature >= 0; }
};

struct GrowingLeaf {
    int node_id = 0;           // index into Tree::nodes
    std::size_t begin = 0;     // segment of the partition array
    std::size_t end = 0;
    double grad_sum = 0.0;
    NodeHistogram hist;
    CandidateSplit best;

    std::size_t count() const { return end - begin; }
};

double leaf_objective(double grad_sum, std::size_t n, double l2) {
    return grad_sum * grad_sum / (static_cast<double>(n) + l2);
}

}  // namespace

Tree grow_tree(const TreeGrowInput& input, const GBDTConfig& config) {
    const auto& binned = *input.binned;
    const auto& bins = *input.bins;
    const auto& features = input.features;
    if (input.rows.empty()) throw std::invalid_argument("cannot grow a tree on zero rows");

    // Feature offsets into the flat histogram.
    std::vector<std::size_t> offset(features.size() + 1, 0);
    for (std::size_t i = 0; i < features.size(); ++i)
        offset[i + 1] = offset[i] + static_cast<std::size_t>(bins.bin_count(features[i]));
    const std::size_t total_bins = offset.back();

    std::vector<std::uint32_t> partition = input.rows;

    const auto build_hist = [&](const GrowingLeaf& leaf, NodeHistogram& h) {
        h.resize(total_bins);
        for (std::size_t i = 0; i < features.size(); ++i) {
            const auto& col = binned[features[i]];
            double* g = h.grad.data() + offset[i];
            std::uint32_t* c = h.count.data() + offset[i];
            for (std::size_t p = leaf.begin; p < leaf.end; ++p) {
                const std::uint16_t b = col[partition[p]];
                g[b] += input.gradients[partition[p]];
                ++c[b];
            }
        }
    };

    const auto find_best = [&](GrowingLeaf& leaf) {
        leaf.best = CandidateSplit{};
        const double parent = leaf_objective(leaf.grad_sum, leaf.count(), config.l2_leaf_penalty);
        const auto min_n = static_cast<std::size_t>(config.min_samples_per_leaf);
        for (std::size_t i = 0; i < features.size(); ++i) {
            const int nbins = bins.bin_count(features[i]);
            const double* g = leaf.hist.grad.data() + offset[i];
            const std::uint32_t* c = leaf.hist.count.data() + offset[i];
            double gl = 0.0;
            std::size_t nl = 0;
            for (int b = 0; b + 1 < nbins; ++b) {
                gl += g[b];
                nl += c[b];
                const std::size_t nr = leaf.count() - nl;
                if (nr < min_n) break;  // nl only grows from here
                if (nl < min_n) continue;
                const double gain = leaf_objective(gl, nl, config.l2_leaf_penalty) +
                                    leaf_objective(leaf.grad_sum - gl, nr,
                                                   config.l2_leaf_penalty) -
                                    parent;
                if (gain > leaf.best.gain) {  // strict: ties keep lowest feature, bin
                    leaf.best.gain = gain;
                    leaf.best.feature = static_cast<int>(features[i]);
                    leaf.best.bin = b;
                }
            }
        }
    };

    Tree tree;
    tree.nodes.emplace_back();

    std::vector<GrowingLeaf> leaves;
    {
        GrowingLeaf root;
        root.node_id = 0;
        root.begin = 0;
        root.end = partition.size();
        for (std::uint32_t r : partition) root.grad_sum += input.gradients[r];
        build_hist(root, root.hist);
        find_best(root);
        leaves.push_back(std::move(root));
    }

    while (static_cast<int>(leaves.size()) < config.num_leaves) {
        // Highest gain; ties go to the earliest-created node.
        std::size_t pick = leaves.size();
        for (std::size_t i = 0; i < leaves.size(); ++i) {
            if (!leaves[i].best.valid() || leaves[i].best.gain <= 0.0) continue;
            if (pick == leaves.size() || leaves[i].best.gain > leaves[pick].best.gain ||
                (leaves[i].best.gain == leaves[pick].best.gain &&
                 leaves[i].node_id < leaves[pick].node_id))
                pick = i;
        }
        if (pick == leaves.size()) break;

        GrowingLeaf parent = std::move(leaves[pick]);
        leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(pick));

        const auto feat = static_cast<std::size_t>(parent.best.feature);
        const int split_bin = parent.best.bin;
        const auto& col = binned[feat];
        auto mid_it = std::stable_partition(
            partition.begin() + static_cast<std::ptrdiff_t>(parent.begin),
            partition.begin() + static_cast<std::ptrdiff_t>(parent.end),
            [&](std::uint32_t r) { return col[r] <= split_bin; });
        const auto mid = static_cast<std::size_t>(mid_it - partition.begin());

        GrowingLeaf left, right;
        left.node_id = static_cast<int>(tree.nodes.size());
        right.node_id = left.node_id + 1;
        left.begin = parent.begin;
        left.end = mid;
        right.begin = mid;
        right.end = parent.end;
        for (std::size_t p = left.begin; p < left.end; ++p)
            left.grad_sum += input.gradients[partition[p]];
        right.grad_sum = parent.grad_sum - left.grad_sum;

        // Build the smaller child's histogram; derive the sibling by
        // subtraction from the parent.
        GrowingLeaf* small = left.count() <= right.count() ? &left : &right;
        GrowingLeaf* large = small == &left ? &right : &left;
        build_hist(*small, small->hist);
        large->hist = std::move(parent.hist);
        for (std::size_t b = 0; b < total_bins; ++b) {
            large->hist.grad[b] -= small->hist.grad[b];
            large->hist.count[b] -= small->hist.count[b];
        }
        find_best(left);
        find_best(right);

        auto& node = tree.nodes[static_cast<std::size_t>(parent.node_id)];
        node.feature = parent.best.feature;
        node.bin = split_bin;
        node.threshold = bins.edges[feat][static_cast<std::size_t>(split_bin)];
        node.left = left.node_id;
        node.right = right.node_id;
        tree.nodes.emplace_back();  // left
        tree.nodes.emplace_back();  // right
        leaves.push_back(std::move(left));
        leaves.push_back(std::move(right));
    }

    // L1-optimal leaf output: median residual, scaled by the learning rate.
    std::vector<double> scratch;
    for (const auto& leaf : leaves) {
        scratch.clear();
        for (std::size_t p = leaf.begin; p < leaf.end; ++p)
            scratch.push_back(input.residuals[partition[p]]);
        const std::size_t mid = scratch.size() / 2;
        std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(mid),
                         scratch.end());
        double median = scratch[mid];
        if (scratch.size() % 2 == 0) {
            const double lower =
                *std::max_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(mid));
            median = lower + (median - lower) / 2.0;
        }
        tree.nodes[static_cast<std::size_t>(leaf.node_id)].value =
            median * config.learning_rate;
    }
    return tree;
}

namespace {

double mean_abs_error(std::span<const double> y, std::span<const double> pred) {
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) sum += std::abs(y[i] - pred[i]);
    return sum / static_cast<double>(y.size());
}

double median_of(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        const double lower =
            *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
        m = lower + (m - lower) / 2.0;
    }
    return m;
}

std::vector<std::uint32_t> sample_indices(std::size_t n, double rate, std::mt19937_64& rng) {
    auto k = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
    k = std::clamp<std::size_t>(k, 1, n);
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    if (k < n) {
        for (std::size_t i = 0; i < k; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, n - 1);
            std::swap(idx[i], idx[pick(rng)]);
        }
        idx.resize(k);
    }
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

GBDTModel gbdt_fit(const DataSlice& train, const DataSlice& val, const GBDTConfig& config) {
    config.validate();
    if (train.n == 0) throw std::invalid_argument("training slice is empty");
    if (val.n == 0)
        throw std::invalid_argument("gbdt_fit requires a validation slice");
    if (val.names != train.names)
        throw std::invalid_argument("validation columns do not match training columns");

    GBDTModel model;
    model.config = config;
    model.column_order = train.names;
    model.base_score = median_of(std::vector<double>(train.y, train.y + train.n));
    model.bins = build_bins(train, config.histogram_bins);

    std::vector<std::vector<std::uint16_t>> binned(train.num_columns());
    for (std::size_t f = 0; f < train.num_columns(); ++f) {
        binned[f].resize(train.n);
        for (std::size_t i = 0; i < train.n; ++i)
            binned[f][i] = static_cast<std::uint16_t>(model.bins.bin_of(f, train.cols[f][i]));
    }

    std::vector<double> pred_train(train.n, model.base_score);
    std::vector<double> pred_val(val.n, model.base_score);
    std::vector<double> gradients(train.n, 0.0);
    std::vector<double> residuals(train.n, 0.0);

    std::mt19937_64 rng(config.seed);
    double best_val = std::numeric_limits<double>::infinity();
    int rounds_since_best = 0;

    for (int round = 1; round <= config.max_rounds; ++round) {
        TreeGrowInput in;
        in.binned = &binned;
        in.bins = &model.bins;
        in.rows = sample_indices(train.n, config.row_subsample, rng);
        in.features = sample_indices(train.num_columns(), config.column_subsample, rng);
        for (std::size_t i = 0; i < train.n; ++i) {
            const double diff = pred_train[i] - train.y[i];
            gradients[i] = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
            residuals[i] = train.y[i] - pred_train[i];
        }
        in.gradients = gradients;
        in.residuals = residuals;

        Tree tree = grow_tree(in, config);

        // Binned traversal on train (exactly equivalent to raw thresholds).
        for (std::size_t i = 0; i < train.n; ++i) {
            int node = 0;
            while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
                const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
                node = binned[static_cast<std::size_t>(nd.feature)][i] <= nd.bin ? nd.left
                                                                                 : nd.right;
            }
            pred_train[i] += tree.nodes[static_cast<std::size_t>(node)].value;
        }
        for (std::size_t i = 0; i < val.n; ++i) pred_val[i] += tree.predict_row(val, i);

        model.trees.push_back(std::move(tree));
        model.train_mae_log.push_back(mean_abs_error({train.y, train.n}, pred_train));
        model.val_mae_log.push_back(mean_abs_error({val.y, val.n}, pred_val));

        if (config.early_stopping) {
            if (model.val_mae_log.back() < best_val) {
                best_val = model.val_mae_log.back();
                model.best_round = round;
                rounds_since_best = 0;
            } else if (++rounds_since_best >= config.early_stopping_patience) {
                break;
            }
        } else {
            model.best_round = round;
        }
    }
    return model;
}

std::vector<double> GBDTModel::predict(const DataSlice& X, int rounds) const {
    if (X.names != column_order)
        throw std::invalid_argument("feature columns do not match the training order");
    if (rounds < 0) rounds = best_round;
    if (rounds > static_cast<int>(trees.size()))
        throw std::invalid_argument("requested more rounds than stored trees");
    std::vector<double> out(X.n, base_score);
    for (int t = 0; t < rounds; ++t)
        for (std::size_t i = 0; i < X.n; ++i) out[i] += trees[static_cast<std::size_t>(t)].predict_row(X, i);
    return out;
}

std::string gbdt_to_json(const GBDTModel& model) {
    nlohmann::json j;
    j["format"] = "epf-gbdt";
    j["version"] = 1;
    j["base_score"] = model.base_score;
    j["best_round"] = model.best_round;
    j["columns"] = model.column_order;
    j["bin_edges"] = model.bins.edges;
    j["config"] = {{"num_leaves", model.config.num_leaves},
                   {"learning_rate", model.config.learning_rate},
                   {"row_subsample", model.config.row_subsample},
                   {"column_subsample", model.config.column_subsample},
                   {"l2_leaf_penalty", model.config.l2_leaf_penalty},
                   {"max_rounds", model.config.max_rounds},
                   {"early_stopping_patience", model.config.early_stopping_patience},
                   {"early_stopping", model.config.early_stopping},
                   {"histogram_bins", model.config.histogram_bins},
                   {"min_samples_per_leaf", model.config.min_samples_per_leaf},
                   {"seed", model.config.seed}};
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : model.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : tree.nodes)
            nodes.push_back({n.feature, n.bin, n.threshold, n.left, n.right, n.value});
        trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
    j["train_mae_log"] = model.train_mae_log;
    j["val_mae_log"] = model.val_mae_log;
    return j.dump();
}

GBDTModel gbdt_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "epf-gbdt")
        throw std::invalid_argument("not a gbdt model document");
    GBDTModel m;
    m.base_score = j.at("base_score").get<double>();
    m.best_round = j.at("best_round").get<int>();
    m.column_order = j.at("columns").get<std::vector<std::string>>();
    m.bins.edges = j.at("bin_edges").get<std::vector<std::vector<double>>>();
    const auto& c = j.at("config");
    m.config.num_leaves = c.at("num_leaves").get<int>();
    m.config.learning_rate = c.at("learning_rate").get<double>();
    m.config.row_subsample = c.at("row_subsample").get<double>();
    m.config.column_subsample = c.at("column_subsample").get<double>();
    m.config.l2_leaf_penalty = c.at("l2_leaf_penalty").get<double>();
    m.config.max_rounds = c.at("max_rounds").get<int>();
    m.config.early_stopping_patience = c.at("early_stopping_patience").get<int>();
    m.config.early_stopping = c.at("early_stopping").get<bool>();
    m.config.histogram_bins = c.at("histogram_bins").get<int>();
    m.config.min_samples_per_leaf = c.at("min_samples_per_leaf").get<int>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    for (const auto& tnodes : j.at("trees")) {
        Tree tree;
        for (const auto& n : tnodes) {
            TreeNode node;
            node.feature = n.at(0).get<int>();
            node.bin = n.at(1).get<int>();
            node.threshold = n.at(2).get<double>();
            node.left = n.at(3).get<int>();
            node.right = n.at(4).get<int>();
            node.value = n.at(5).get<double>();
            tree.nodes.push_back(node);
        }
        m.trees.push_back(std::move(tree));
    }
    m.train_mae_log = j.at("train_mae_log").get<std::vector<double>>();
    m.val_mae_log = j.at("val_mae_log").get<std::vector<double>>();
    return m;
}

}  // namespace epf
