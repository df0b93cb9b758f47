#include "defectlens/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "defectlens/rng.hpp"

namespace defectlens {

namespace {

struct TreeBuilder {
    const Matrix& X;
    const std::vector<int>& y;
    const ClassWeights& weights;
    std::size_t mtry;
    std::size_t min_samples_split;
    Rng rng;
    std::vector<TreeNode> nodes;

    // Scratch reused across nodes: (value, weighted labels) sorted per feature.
    struct Entry {
        double value;
        double w_pos;
        double w_neg;
    };
    std::vector<Entry> scratch;

    int grow(std::vector<std::size_t>& samples) {
        double w_pos = 0.0, w_neg = 0.0;
        for (auto i : samples) {
            if (y[i] == 1) {
                w_pos += weights.weight_positive;
            } else {
                w_neg += weights.weight_negative;
            }
        }
        const double total = w_pos + w_neg;
        const double leaf_prob = total > 0 ? w_pos / total : 0.0;

        const bool pure = (w_pos == 0.0 || w_neg == 0.0);
        if (pure || samples.size() < min_samples_split) return make_leaf(leaf_prob);

        const auto candidates = rng.sample_indices(X.cols(), mtry);

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_impurity = std::numeric_limits<double>::infinity();

        for (auto f : candidates) {
            scratch.clear();
            scratch.reserve(samples.size());
            for (auto i : samples) {
                scratch.push_back({X(i, f), y[i] == 1 ? weights.weight_positive : 0.0,
                                   y[i] == 1 ? 0.0 : weights.weight_negative});
            }
            std::sort(scratch.begin(), scratch.end(),
                      [](const Entry& a, const Entry& b) { return a.value < b.value; });

            double left_pos = 0.0, left_neg = 0.0;
            for (std::size_t i = 0; i + 1 < scratch.size(); ++i) {
                left_pos += scratch[i].w_pos;
                left_neg += scratch[i].w_neg;
                if (scratch[i].value == scratch[i + 1].value) continue;

                const double right_pos = w_pos - left_pos;
                const double right_neg = w_neg - left_neg;
                const double wl = left_pos + left_neg;
                const double wr = right_pos + right_neg;
                // weighted Gini: sum_side W_side * (1 - p^2 - q^2), normalized by W
                const double gini_l = 1.0 - (left_pos / wl) * (left_pos / wl) -
                                      (left_neg / wl) * (left_neg / wl);
                const double gini_r = 1.0 - (right_pos / wr) * (right_pos / wr) -
                                      (right_neg / wr) * (right_neg / wr);
                const double impurity = (wl * gini_l + wr * gini_r) / total;
                if (impurity < best_impurity) {
                    best_impurity = impurity;
                    best_feature = static_cast<int>(f);
                    best_threshold = 0.5 * (scratch[i].value + scratch[i + 1].value);
                }
            }
        }

        if (best_feature < 0) return make_leaf(leaf_prob); // all candidates constant

        std::vector<std::size_t> left_samples, right_samples;
        left_samples.reserve(samples.size());
        right_samples.reserve(samples.size());
        for (auto i : samples) {
            (X(i, static_cast<std::size_t>(best_feature)) <= best_threshold ? left_samples
                                                                            : right_samples)
                .push_back(i);
        }
        samples.clear();
        samples.shrink_to_fit();

        const int id = static_cast<int>(nodes.size());
        nodes.push_back(TreeNode{best_feature, best_threshold, -1, -1, leaf_prob});
        const int left = grow(left_samples);
        const int right = grow(right_samples);
        nodes[static_cast<std::size_t>(id)].left = left;
        nodes[static_cast<std::size_t>(id)].right = right;
        return id;
    }

    int make_leaf(double prob) {
        nodes.push_back(TreeNode{-1, 0.0, -1, -1, prob});
        return static_cast<int>(nodes.size() - 1);
    }
};

DecisionTree build_tree(const Matrix& X, const std::vector<int>& y, const ClassWeights& w,
                        std::uint64_t tree_seed, const ForestParams& params) {
    const std::size_t n = X.rows();
    const std::size_t mtry =
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(X.cols()))));

    TreeBuilder builder{X, y, w, mtry, params.min_samples_split, Rng(tree_seed), {}, {}};

    std::vector<std::size_t> bootstrap(n);
    for (std::size_t i = 0; i < n; ++i) {
        bootstrap[i] = static_cast<std::size_t>(builder.rng.uniform_below(n));
    }

    builder.grow(bootstrap);
    return DecisionTree{std::move(builder.nodes)};
}

} // namespace

bool DecisionTree::operator==(const DecisionTree& other) const {
    if (nodes.size() != other.nodes.size()) return false;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& a = nodes[i];
        const auto& b = other.nodes[i];
        if (a.feature != b.feature || a.threshold != b.threshold || a.left != b.left ||
            a.right != b.right || a.prob != b.prob) {
            return false;
        }
    }
    return true;
}

double DecisionTree::predict_row(std::span<const double> x) const {
    std::size_t node = 0;
    while (nodes[node].feature >= 0) {
        const auto& n = nodes[node];
        node = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold
                                            ? n.left
                                            : n.right);
    }
    return nodes[node].prob;
}

double ForestModel::predict_row(std::span<const double> x) const {
    if (x.size() != n_features) throw WidthMismatch(n_features, x.size());
    double sum = 0.0;
    for (const auto& tree : trees) sum += tree.predict_row(x);
    return sum / static_cast<double>(trees.size());
}

std::vector<double> ForestModel::predict_proba(const Matrix& X, ExecMode mode) const {
    if (X.cols() != n_features) throw WidthMismatch(n_features, X.cols());
    std::vector<double> out(X.rows());
    parallel_for(X.rows(), mode, [&](std::size_t r) { out[r] = predict_row(X.row(r)); });
    return out;
}

std::vector<double> ForestModel::tree_probas(std::span<const double> x) const {
    std::vector<double> out;
    out.reserve(trees.size());
    for (const auto& tree : trees) out.push_back(tree.predict_row(x));
    return out;
}

ForestModel fit_random_forest(const Matrix& X, const std::vector<int>& y, const ClassWeights& w,
                              const TrainConfig& cfg, const ForestParams& params, ExecMode mode) {
    if (X.rows() != y.size()) throw LengthMismatch(X.rows(), y.size());
    if (X.rows() == 0) throw EmptyMatrix();
    bool has_pos = false, has_neg = false;
    for (int yi : y) (yi == 1 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw SingleClass();

    ForestModel model;
    model.n_features = X.cols();
    model.tree_seeds.resize(params.n_trees);
    for (std::size_t t = 0; t < params.n_trees; ++t) {
        model.tree_seeds[t] = derive_seed(cfg.seed, t);
    }
    model.trees.resize(params.n_trees);
    parallel_for(params.n_trees, mode, [&](std::size_t t) {
        model.trees[t] = build_tree(X, y, w, model.tree_seeds[t], params);
    });
    return model;
}

} // namespace defectlens
