#include "defectlens/logistic.hpp"

#include <cmath>

#include "defectlens/math_util.hpp"

namespace defectlens {

double LogisticModel::predict_row(std::span<const double> x) const {
    if (x.size() != weights.size()) throw WidthMismatch(weights.size(), x.size());
    return sigmoid(bias + dot(weights, x));
}

std::vector<double> LogisticModel::predict_proba(const Matrix& X) const {
    if (X.cols() != weights.size()) throw WidthMismatch(weights.size(), X.cols());
    std::vector<double> out(X.rows());
    for (std::size_t r = 0; r < X.rows(); ++r) out[r] = predict_row(X.row(r));
    return out;
}

std::vector<double> LogisticModel::input_gradient(std::span<const double> x) const {
    if (x.size() != weights.size()) throw WidthMismatch(weights.size(), x.size());
    const double p = sigmoid(bias + dot(weights, x));
    const double slope = p * (1.0 - p);
    std::vector<double> g(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) g[i] = slope * weights[i];
    return g;
}

double logistic_loss(const LogisticModel& model, const Matrix& X, const std::vector<int>& y,
                     const ClassWeights& w, double l2_penalty) {
    const auto n = static_cast<double>(X.rows());
    double loss = 0.0;
    for (std::size_t r = 0; r < X.rows(); ++r) {
        const double z = model.bias + dot(model.weights, X.row(r));
        // softplus(z) - y*z == -log p for y=1, -log(1-p) for y=0
        loss += w.of(y[r]) * (softplus(z) - static_cast<double>(y[r]) * z);
    }
    loss /= n;
    double sq = 0.0;
    for (double wi : model.weights) sq += wi * wi;
    return loss + 0.5 * l2_penalty * sq;
}

LogisticModel fit_logistic(const Matrix& X, const std::vector<int>& y, const ClassWeights& w,
                           const TrainConfig& cfg) {
    if (X.rows() != y.size()) throw LengthMismatch(X.rows(), y.size());
    if (X.rows() == 0) throw EmptyMatrix();
    bool has_pos = false, has_neg = false;
    for (int yi : y) (yi == 1 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw SingleClass();

    const std::size_t n = X.rows();
    const std::size_t p = X.cols();
    const double inv_n = 1.0 / static_cast<double>(n);

    LogisticModel model;
    model.weights.assign(p, 0.0);

    std::vector<double> grad_w(p);
    constexpr double grad_tol = 1e-6;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::fill(grad_w.begin(), grad_w.end(), 0.0);
        double grad_b = 0.0;

        for (std::size_t r = 0; r < n; ++r) {
            const auto row = X.row(r);
            const double z = model.bias + dot(model.weights, row);
            const double residual = w.of(y[r]) * (sigmoid(z) - static_cast<double>(y[r]));
            for (std::size_t c = 0; c < p; ++c) grad_w[c] += residual * row[c];
            grad_b += residual;
        }
        double inf_norm = std::abs(grad_b * inv_n);
        for (std::size_t c = 0; c < p; ++c) {
            grad_w[c] = grad_w[c] * inv_n + cfg.l2_penalty * model.weights[c];
            inf_norm = std::max(inf_norm, std::abs(grad_w[c]));
        }
        grad_b *= inv_n;

        if (inf_norm <= grad_tol) break;

        for (std::size_t c = 0; c < p; ++c) model.weights[c] -= cfg.learning_rate * grad_w[c];
        model.bias -= cfg.learning_rate * grad_b;

        if (!std::isfinite(model.bias)) throw NonFiniteLoss("logistic fit");
        for (double wi : model.weights) {
            if (!std::isfinite(wi)) throw NonFiniteLoss("logistic fit");
        }
    }
    return model;
}

} // namespace defectlens
