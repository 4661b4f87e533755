#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

#include "epf/gbdt.hpp"
#include "epf/metrics.hpp"
#include "support/oracles.hpp"

using namespace epf;

namespace {

DataSlice make_slice(const std::vector<std::vector<double>>& cols,
                     const std::vector<double>& y) {
    DataSlice s;
    s.n = y.size();
    s.y = y.data();
    for (std::size_t c = 0; c < cols.size(); ++c) {
        s.cols.push_back(cols[c].data());
        s.names.push_back("f" + std::to_string(c));
    }
    return s;
}

GBDTConfig small_config() {
    GBDTConfig c;
    c.num_leaves = 8;
    c.learning_rate = 0.3;
    c.row_subsample = 1.0;
    c.column_subsample = 1.0;
    c.max_rounds = 60;
    c.early_stopping_patience = 15;
    c.min_samples_per_leaf = 1;
    c.seed = 11;
    return c;
}

struct Synthetic {
    std::vector<std::vector<double>> cols;
    std::vector<double> y;
};

// y depends on a daily lag proxy and a step in feature 1.
Synthetic step_problem(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Synthetic s;
    s.cols.assign(3, std::vector<double>(n));
    s.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.cols[0][i] = uniform(rng);
        s.cols[1][i] = uniform(rng);
        s.cols[2][i] = normal(rng);
        s.y[i] = (s.cols[0][i] > 0.5 ? 10.0 : -5.0) + (s.cols[1][i] > 0.8 ? 4.0 : 0.0) +
                 0.3 * normal(rng);
    }
    return s;
}

}  // namespace

TEST_CASE("build_bins") {
    SUBCASE("constant column collapses to one bucket") {
        const std::vector<std::vector<double>> cols = {std::vector<double>(100, 3.0)};
        const std::vector<double> y(100, 0.0);
        const BinEdges bins = build_bins(make_slice(cols, y), 255);
        CHECK(bins.bin_count(0) == 1);
        CHECK(bins.bin_of(0, 3.0) == 0);
        CHECK(bins.bin_of(0, -100.0) == 0);
    }

    SUBCASE("binary column gets two buckets regardless of the budget") {
        std::vector<double> v(50, 0.0);
        for (std::size_t i = 0; i < v.size(); i += 2) v[i] = 1.0;
        const std::vector<std::vector<double>> cols = {v};
        const std::vector<double> y(50, 0.0);
        const BinEdges bins = build_bins(make_slice(cols, y), 255);
        CHECK(bins.bin_count(0) == 2);
        CHECK(bins.bin_of(0, 0.0) == 0);
        CHECK(bins.bin_of(0, 1.0) == 1);
    }

    SUBCASE("1..1000 with 255 bins keeps every bucket at least floor(1000/255)") {
        std::vector<double> v(1000);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i + 1);
        const std::vector<std::vector<double>> cols = {v};
        const std::vector<double> y(1000, 0.0);
        const BinEdges bins = build_bins(make_slice(cols, y), 255);
        CHECK(bins.bin_count(0) <= 255);
        std::vector<int> counts(static_cast<std::size_t>(bins.bin_count(0)), 0);
        for (double x : v) ++counts[static_cast<std::size_t>(bins.bin_of(0, x))];
        for (int c : counts) CHECK(c >= 1000 / 255);
    }
}

TEST_CASE("grow_tree") {
    GBDTConfig config = small_config();

    SUBCASE("one binary feature perfectly separating the residuals") {
        config.num_leaves = 4;
        const std::vector<std::vector<double>> cols = {{0.0, 0.0, 1.0, 1.0}};
        const std::vector<double> y = {-1.0, -1.0, 1.0, 1.0};
        const std::vector<double> pred(4, 0.0);
        const BinEdges bins = build_bins(make_slice(cols, y), 255);
        std::vector<std::vector<std::uint16_t>> binned(1);
        binned[0].resize(4);
        for (std::size_t i = 0; i < 4; ++i)
            binned[0][i] = static_cast<std::uint16_t>(bins.bin_of(0, cols[0][i]));
        std::vector<double> gradients(4), residuals(4);
        for (std::size_t i = 0; i < 4; ++i) {
            const double diff = pred[i] - y[i];
            gradients[i] = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
            residuals[i] = y[i] - pred[i];
        }
        TreeGrowInput in;
        in.binned = &binned;
        in.bins = &bins;
        in.gradients = gradients;
        in.residuals = residuals;
        in.rows = {0, 1, 2, 3};
        in.features = {0};
        const Tree tree = grow_tree(in, config);
        CHECK(tree.num_leaves() == 2);  // one split, then no positive gain remains
        const DataSlice X = make_slice(cols, y);
        CHECK(tree.predict_row(X, 0) == doctest::Approx(-1.0 * config.learning_rate));
        CHECK(tree.predict_row(X, 3) == doctest::Approx(1.0 * config.learning_rate));
    }

    SUBCASE("zero-gain gradients produce a stump with the median residual") {
        // Alternating residual signs within each bin: every candidate split
        // has G_L = G_R = 0, so no gain is strictly positive.
        const std::vector<std::vector<double>> cols = {{0.0, 0.0, 1.0, 1.0}};
        const std::vector<double> residuals = {-2.0, 2.0, -2.0, 2.0};
        std::vector<double> gradients = {-1.0, 1.0, -1.0, 1.0};
        const std::vector<double> y(4, 0.0);
        const BinEdges bins = build_bins(make_slice(cols, y), 255);
        std::vector<std::vector<std::uint16_t>> binned(1, std::vector<std::uint16_t>(4));
        for (std::size_t i = 0; i < 4; ++i)
            binned[0][i] = static_cast<std::uint16_t>(bins.bin_of(0, cols[0][i]));
        TreeGrowInput in;
        in.binned = &binned;
        in.bins = &bins;
        in.gradients = gradients;
        in.residuals = residuals;
        in.rows = {0, 1, 2, 3};
        in.features = {0};
        const Tree tree = grow_tree(in, config);
        CHECK(tree.num_leaves() == 1);
        CHECK(tree.nodes[0].value == doctest::Approx(0.0 * config.learning_rate));
    }
}

TEST_CASE("gbdt_fit on a 200-row step function tracks the exact-split oracle") {
    const Synthetic s = step_problem(200, 17);
    GBDTConfig config = small_config();
    config.num_leaves = 8;
    config.learning_rate = 1.0;
    config.max_rounds = 1;
    config.early_stopping = false;
    const DataSlice slice = make_slice(s.cols, s.y);
    const GBDTModel model = gbdt_fit(slice, slice, config);
    const auto pred = model.predict(slice, 1);
    const double engine_mae = mae(s.y, pred);

    // Oracle: one exact-threshold tree on the same residuals (initial
    // prediction = median), same leaf rule.
    std::vector<double> residuals(s.y.size());
    for (std::size_t i = 0; i < s.y.size(); ++i) residuals[i] = s.y[i] - model.base_score;
    testsupport::ExactCartOracle oracle(s.cols, residuals, config.num_leaves,
                                        config.l2_leaf_penalty, config.min_samples_per_leaf);
    const auto oracle_delta = oracle.fit_predict();
    std::vector<double> oracle_pred(s.y.size());
    for (std::size_t i = 0; i < s.y.size(); ++i)
        oracle_pred[i] = model.base_score + oracle_delta[i];
    const double oracle_mae = mae(s.y, oracle_pred);

    CHECK(engine_mae <= oracle_mae * 1.05 + 1e-9);  // binning granularity bound
}

TEST_CASE("gbdt_fit contracts") {
    const Synthetic train = step_problem(400, 3);
    const Synthetic val = step_problem(150, 4);
    const GBDTConfig config = small_config();
    const GBDTModel model =
        gbdt_fit(make_slice(train.cols, train.y), make_slice(val.cols, val.y), config);

    SUBCASE("determinism: identical seed gives a bit-identical model") {
        const GBDTModel again =
            gbdt_fit(make_slice(train.cols, train.y), make_slice(val.cols, val.y), config);
        CHECK(again.base_score == model.base_score);
        CHECK(again.best_round == model.best_round);
        REQUIRE(again.trees.size() == model.trees.size());
        for (std::size_t t = 0; t < model.trees.size(); ++t) {
            REQUIRE(again.trees[t].nodes.size() == model.trees[t].nodes.size());
            for (std::size_t n = 0; n < model.trees[t].nodes.size(); ++n) {
                CHECK(again.trees[t].nodes[n].feature == model.trees[t].nodes[n].feature);
                CHECK(again.trees[t].nodes[n].bin == model.trees[t].nodes[n].bin);
                CHECK(again.trees[t].nodes[n].value == model.trees[t].nodes[n].value);
            }
        }
        CHECK(again.val_mae_log == model.val_mae_log);
    }

    SUBCASE("leaf count bound") {
        for (const auto& tree : model.trees) CHECK(tree.num_leaves() <= config.num_leaves);
    }

    SUBCASE("early stopping picks the validation optimum") {
        REQUIRE(model.best_round >= 1);
        const double best = model.val_mae_log[static_cast<std::size_t>(model.best_round - 1)];
        for (double v : model.val_mae_log) CHECK(best <= v + 1e-15);
    }

    SUBCASE("round replay is bit-exact at best_round") {
        const auto a = model.predict(make_slice(val.cols, val.y));
        const auto b = model.predict(make_slice(val.cols, val.y), model.best_round);
        CHECK(a == b);
    }

    SUBCASE("rounds = 0 predicts the base score") {
        const auto pred = model.predict(make_slice(val.cols, val.y), 0);
        for (double v : pred) CHECK(v == model.base_score);
    }

    SUBCASE("serialization round-trips bit-exactly") {
        const GBDTModel loaded = gbdt_from_json(gbdt_to_json(model));
        const auto a = model.predict(make_slice(val.cols, val.y));
        const auto b = loaded.predict(make_slice(val.cols, val.y));
        CHECK(a == b);
        CHECK(loaded.best_round == model.best_round);
        CHECK(loaded.bins.edges == model.bins.edges);
    }

    SUBCASE("empty validation is a protocol error") {
        DataSlice empty = make_slice(val.cols, val.y);
        empty.n = 0;
        CHECK_THROWS_AS(gbdt_fit(make_slice(train.cols, train.y), empty, config),
                        std::invalid_argument);
    }
}

TEST_CASE("shift equivariance under target translation") {
    const Synthetic train = step_problem(300, 8);
    const Synthetic val = step_problem(120, 9);
    const GBDTConfig config = small_config();

    auto shifted_train = train.y;
    auto shifted_val = val.y;
    const double c = 137.25;
    for (auto& v : shifted_train) v += c;
    for (auto& v : shifted_val) v += c;

    const GBDTModel base =
        gbdt_fit(make_slice(train.cols, train.y), make_slice(val.cols, val.y), config);
    const GBDTModel shifted = gbdt_fit(make_slice(train.cols, shifted_train),
                                       make_slice(val.cols, shifted_val), config);
    const auto pred_base = base.predict(make_slice(val.cols, val.y));
    const auto pred_shift = shifted.predict(make_slice(val.cols, shifted_val));
    REQUIRE(pred_base.size() == pred_shift.size());
    for (std::size_t i = 0; i < pred_base.size(); ++i)
        CHECK(pred_shift[i] - pred_base[i] == doctest::Approx(c).epsilon(1e-9));
}

TEST_CASE("constant target converges immediately") {
    const std::vector<std::vector<double>> cols = {{1, 2, 3, 4, 5, 6, 7, 8}};
    const std::vector<double> y(8, 55.5);
    GBDTConfig config = small_config();
    config.early_stopping_patience = 5;
    const GBDTModel model = gbdt_fit(make_slice(cols, y), make_slice(cols, y), config);
    CHECK(model.base_score == 55.5);
    CHECK(model.best_round == 1);  // round 1 improves on the +inf sentinel, then patience runs out
    CHECK(static_cast<int>(model.trees.size()) == 1 + config.early_stopping_patience);
    const auto pred = model.predict(make_slice(cols, y));
    for (double v : pred) CHECK(v == 55.5);
    CHECK(model.train_mae_log.front() == 0.0);
}

TEST_CASE("binned and raw-threshold traversal agree on training rows") {
    // The trainer partitions by bin index while predict() walks raw-value
    // thresholds; the two routes must classify every training row the same
    // way, otherwise the stored thresholds do not reproduce the fit.
    const Synthetic train = step_problem(500, 41);
    const Synthetic val = step_problem(100, 42);
    GBDTConfig config = small_config();
    config.row_subsample = 0.8;
    config.column_subsample = 0.8;
    config.max_rounds = 30;
    const GBDTModel model =
        gbdt_fit(make_slice(train.cols, train.y), make_slice(val.cols, val.y), config);

    // Replay the training predictions through raw thresholds.
    std::vector<double> replay(train.y.size(), model.base_score);
    const DataSlice X = make_slice(train.cols, train.y);
    for (std::size_t t = 0; t < model.trees.size(); ++t)
        for (std::size_t i = 0; i < train.y.size(); ++i)
            replay[i] += model.trees[t].predict_row(X, i);

    // The recorded final-round training MAE came from binned traversal.
    double replay_mae = 0.0;
    for (std::size_t i = 0; i < train.y.size(); ++i)
        replay_mae += std::abs(train.y[i] - replay[i]);
    replay_mae /= static_cast<double>(train.y.size());
    CHECK(replay_mae == doctest::Approx(model.train_mae_log.back()).epsilon(1e-12));
}

TEST_CASE("L1 leaf optimality: the median minimizes in-leaf absolute error") {
    const Synthetic s = step_problem(200, 23);
    GBDTConfig config = small_config();
    config.max_rounds = 1;
    config.early_stopping = false;
    config.learning_rate = 1.0;
    const DataSlice slice = make_slice(s.cols, s.y);
    const GBDTModel model = gbdt_fit(slice, slice, config);
    const Tree& tree = model.trees.front();

    // Collect rows per leaf by replaying the traversal.
    std::map<int, std::vector<double>> leaf_residuals;
    for (std::size_t i = 0; i < s.y.size(); ++i) {
        int node = 0;
        while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
            const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
            node = s.cols[static_cast<std::size_t>(nd.feature)][i] <= nd.threshold ? nd.left
                                                                                   : nd.right;
        }
        leaf_residuals[node].push_back(s.y[i] - model.base_score);
    }
    for (const auto& [node, residuals] : leaf_residuals) {
        const double value = tree.nodes[static_cast<std::size_t>(node)].value;
        const auto loss = [&](double v) {
            double acc = 0.0;
            for (double r : residuals) acc += std::abs(r - v);
            return acc;
        };
        for (double eps : {-0.05, 0.05, -0.5, 0.5})
            CHECK(loss(value) <= loss(value + eps) + 1e-12);
    }
}
