#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "defectlens/dataset.hpp"
#include "defectlens/matrix.hpp"
#include "defectlens/parallel.hpp"
#include "defectlens/train_config.hpp"

namespace defectlens {

// Binary decision tree stored as a flat node array. feature < 0 marks a leaf.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double prob = 0.0; // weighted positive fraction, meaningful at leaves
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    double predict_row(std::span<const double> x) const;

    bool operator==(const DecisionTree& other) const;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    std::vector<std::uint64_t> tree_seeds;
    std::size_t n_features = 0;

    std::size_t width() const { return n_features; }

    double predict_row(std::span<const double> x) const;
    std::vector<double> predict_proba(const Matrix& X,
                                      ExecMode mode = ExecMode::Parallel) const;

    // Per-tree leaf probabilities for one row (ensemble = their mean).
    std::vector<double> tree_probas(std::span<const double> x) const;
};

struct ForestParams {
    std::size_t n_trees = 100;
    std::size_t min_samples_split = 2;
};

// Bagged trees with class-weighted Gini splits over ceil(sqrt(p)) candidate
// features per node. Per-tree seeds are derived up front so serial and
// parallel training build identical forests.
ForestModel fit_random_forest(const Matrix& X, const std::vector<int>& y, const ClassWeights& w,
                              const TrainConfig& cfg, const ForestParams& params = {},
                              ExecMode mode = ExecMode::Parallel);

} // namespace defectlens
