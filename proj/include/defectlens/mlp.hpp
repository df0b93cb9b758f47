#pragma once

#include <array>
#include <span>
#include <vector>

#include "defectlens/dataset.hpp"
#include "defectlens/matrix.hpp"
#include "defectlens/train_config.hpp"

namespace defectlens {

// Dense network p -> 64 -> 32 -> 20 -> 10 -> 1, ReLU hidden activations,
// sigmoid output. Dropout applies during training only (inverted scaling, so
// inference needs no correction).
class MlpModel {
public:
    static constexpr std::array<std::size_t, 4> kHiddenSizes{64, 32, 20, 10};

    MlpModel() = default;
    explicit MlpModel(std::size_t input_width);

    std::size_t width() const { return input_width_; }
    std::size_t layer_count() const { return weights_.size(); }

    double predict_row(std::span<const double> x) const;
    std::vector<double> predict_proba(const Matrix& X) const;
    double logit_row(std::span<const double> x) const;

    // Exact reverse-mode gradient of the probability output at x (dropout
    // off, ReLU subgradient at 0 taken as 0).
    std::vector<double> input_gradient(std::span<const double> x) const;
    // Same, of the pre-sigmoid logit.
    std::vector<double> logit_gradient(std::span<const double> x) const;

    // weights_[l] is (out x in); biases_[l] has out entries.
    std::vector<Matrix>& weights() { return weights_; }
    const std::vector<Matrix>& weights() const { return weights_; }
    std::vector<std::vector<double>>& biases() { return biases_; }
    const std::vector<std::vector<double>>& biases() const { return biases_; }

    double dropout_rate = 0.0; // rate the model was trained with

private:
    std::size_t input_width_ = 0;
    std::vector<Matrix> weights_;
    std::vector<std::vector<double>> biases_;
};

struct MlpFitInfo {
    std::size_t epochs_run = 0;
    double best_validation_auc = -1.0; // -1 when no validation split was used
    double final_train_loss = 0.0;
    bool early_stopped = false;
};

// Glorot-uniform init, Adam on class-weighted binary cross-entropy, seeded
// minibatch shuffling, inverted dropout, early stopping on validation AUC
// with best-weight restore. Deterministic per seed.
MlpModel fit_mlp(const Matrix& X, const std::vector<int>& y, const ClassWeights& w,
                 const TrainConfig& cfg, MlpFitInfo* info = nullptr);

} // namespace defectlens
