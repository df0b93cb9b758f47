#pragma once

#include <span>
#include <vector>

#include "defectlens/dataset.hpp"
#include "defectlens/matrix.hpp"
#include "defectlens/train_config.hpp"

namespace defectlens {

struct LogisticModel {
    std::vector<double> weights;
    double bias = 0.0;

    std::size_t width() const { return weights.size(); }

    double predict_row(std::span<const double> x) const;
    std::vector<double> predict_proba(const Matrix& X) const;

    // Exact gradient of the probability output: sigma'(z) * weights.
    std::vector<double> input_gradient(std::span<const double> x) const;
};

// Full-batch gradient descent on class-weighted binary cross-entropy plus an
// L2 penalty on the weights (not the bias). Zero-initialized, so the fit is
// seed-independent. Stops when the gradient infinity norm drops to 1e-6.
LogisticModel fit_logistic(const Matrix& X, const std::vector<int>& y, const ClassWeights& w,
                           const TrainConfig& cfg);

// Mean per-sample weighted cross-entropy plus the L2 term; exposed for the
// loss-monotonicity property.
double logistic_loss(const LogisticModel& model, const Matrix& X, const std::vector<int>& y,
                     const ClassWeights& w, double l2_penalty);

} // namespace defectlens
