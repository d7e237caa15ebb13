#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace vexus {

// Gradient-boosted regression trees, squared-error objective, exact
// (pre-sorted) splits. Deterministic: ties in split search resolve by
// feature index, then sample position.

struct GbtNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf output (unscaled)
};

struct GbtTree {
    std::vector<GbtNode> nodes;

    double predict(const double* x) const {
        int i = 0;
        while (nodes[static_cast<size_t>(i)].feature >= 0) {
            const auto& n = nodes[static_cast<size_t>(i)];
            i = x[n.feature] <= n.threshold ? n.left : n.right;
        }
        return nodes[static_cast<size_t>(i)].value;
    }
};

struct GbtParams {
    int n_trees = 400;
    int max_depth = 10;
    double learning_rate = 0.1;
    int min_samples_leaf = 1;
};

struct GbtModel {
    double base_score = 0.0;
    double learning_rate = 0.1;
    std::vector<GbtTree> trees;

    double predict(const double* x) const {
        double p = base_score;
        for (const auto& t : trees) p += learning_rate * t.predict(x);
        return p;
    }
    double predict(const std::vector<double>& x) const { return predict(x.data()); }
};

namespace detail {

struct NodeBuild {
    int64_t count = 0;
    double sum = 0.0;
    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    // scan state, reset per feature
    int64_t left_count = 0;
    double left_sum = 0.0;
    double prev_value = 0.0;
    int node_index = -1;  // index in tree.nodes
};

inline GbtTree fit_tree(const std::vector<std::vector<double>>& x,
                        const std::vector<double>& residual,
                        const std::vector<std::vector<int>>& sorted_by_feature,
                        const GbtParams& params) {
    const int64_t n = static_cast<int64_t>(residual.size());
    const size_t n_features = sorted_by_feature.size();

    GbtTree tree;
    tree.nodes.push_back({});
    std::vector<int> node_of(static_cast<size_t>(n), 0);    // tree-node index per sample
    std::vector<int> build_of(tree.nodes.size(), 0);        // tree-node -> active slot, -1 if done

    std::vector<NodeBuild> active(1);
    active[0].node_index = 0;
    active[0].count = n;
    active[0].sum = std::accumulate(residual.begin(), residual.end(), 0.0);

    for (int depth = 0; depth < params.max_depth && !active.empty(); ++depth) {
        // split search: one pass per feature over the feature-sorted order
        for (size_t f = 0; f < n_features; ++f) {
            for (auto& a : active) {
                a.left_count = 0;
                a.left_sum = 0.0;
            }
            for (int i : sorted_by_feature[f]) {
                int slot = build_of[static_cast<size_t>(node_of[static_cast<size_t>(i)])];
                if (slot < 0) continue;
                NodeBuild& a = active[static_cast<size_t>(slot)];
                const double v = x[static_cast<size_t>(i)][f];
                if (a.left_count > 0 && v > a.prev_value) {
                    const int64_t rc = a.count - a.left_count;
                    if (a.left_count >= params.min_samples_leaf &&
                        rc >= params.min_samples_leaf) {
                        const double rs = a.sum - a.left_sum;
                        double gain = a.left_sum * a.left_sum / a.left_count + rs * rs / rc -
                                      a.sum * a.sum / a.count;
                        if (gain > a.best_gain + 1e-12) {
                            a.best_gain = gain;
                            a.best_feature = static_cast<int>(f);
                            // The midpoint of two adjacent doubles can round up
                            // to v, which would route v's samples to the wrong
                            // side and starve the right child; fall back to the
                            // left value, which always separates the partition.
                            double thr = 0.5 * (a.prev_value + v);
                            a.best_threshold = thr < v ? thr : a.prev_value;
                        }
                    }
                }
                a.left_count += 1;
                a.left_sum += residual[static_cast<size_t>(i)];
                a.prev_value = v;
            }
        }

        // materialize splits / leaves
        std::vector<NodeBuild> next;
        for (auto& a : active) {
            GbtNode& node = tree.nodes[static_cast<size_t>(a.node_index)];
            if (a.best_feature < 0 || depth == params.max_depth - 1) {
                node.value = a.sum / static_cast<double>(a.count);
                build_of[static_cast<size_t>(a.node_index)] = -1;
                continue;
            }
            const int left = static_cast<int>(tree.nodes.size());
            const int right = left + 1;
            node.feature = a.best_feature;
            node.threshold = a.best_threshold;
            node.left = left;
            node.right = right;
            tree.nodes.push_back({});  // invalidates `node`
            tree.nodes.push_back({});
            build_of.resize(tree.nodes.size(), -1);
            build_of[static_cast<size_t>(a.node_index)] = -1;

            NodeBuild l, r;
            l.node_index = left;
            r.node_index = right;
            build_of[static_cast<size_t>(left)] = static_cast<int>(next.size());
            next.push_back(l);
            build_of[static_cast<size_t>(right)] = static_cast<int>(next.size());
            next.push_back(r);
        }

        if (next.empty()) break;

        // route samples one level down and refresh node stats
        for (int64_t i = 0; i < n; ++i) {
            int ni = node_of[static_cast<size_t>(i)];
            const GbtNode& node = tree.nodes[static_cast<size_t>(ni)];
            if (node.feature < 0) continue;
            ni = x[static_cast<size_t>(i)][node.feature] <= node.threshold ? node.left : node.right;
            node_of[static_cast<size_t>(i)] = ni;
            int slot = build_of[static_cast<size_t>(ni)];
            if (slot >= 0) {
                next[static_cast<size_t>(slot)].count += 1;
                next[static_cast<size_t>(slot)].sum += residual[static_cast<size_t>(i)];
            }
        }
        active = std::move(next);
    }
    return tree;
}

}  // namespace detail

inline GbtModel train_gbt(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                          const GbtParams& params) {
    const size_t n = y.size();
    if (n == 0 || x.size() != n) throw std::invalid_argument("gbt: empty or mismatched dataset");
    const size_t n_features = x[0].size();
    for (const auto& row : x)
        if (row.size() != n_features) throw std::invalid_argument("gbt: ragged feature matrix");
    for (double v : y)
        if (!std::isfinite(v)) throw std::invalid_argument("gbt: non-finite target");

    std::vector<std::vector<int>> sorted_by_feature(n_features);
    for (size_t f = 0; f < n_features; ++f) {
        auto& idx = sorted_by_feature[f];
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) {
            double va = x[static_cast<size_t>(a)][f], vb = x[static_cast<size_t>(b)][f];
            if (va != vb) return va < vb;
            return a < b;
        });
    }

    GbtModel model;
    model.learning_rate = params.learning_rate;
    model.base_score = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

    std::vector<double> pred(n, model.base_score);
    std::vector<double> residual(n);
    for (int t = 0; t < params.n_trees; ++t) {
        for (size_t i = 0; i < n; ++i) residual[i] = y[i] - pred[i];
        GbtTree tree = detail::fit_tree(x, residual, sorted_by_feature, params);
        for (size_t i = 0; i < n; ++i)
            pred[i] += params.learning_rate * tree.predict(x[i].data());
        model.trees.push_back(std::move(tree));
    }
    return model;
}

}  // namespace vexus
