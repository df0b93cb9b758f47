#include "defectlens/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "defectlens/math_util.hpp"
#include "defectlens/metrics.hpp"
#include "defectlens/rng.hpp"

namespace defectlens {

namespace {

// RNG stream tags per fit: init, validation split, epoch shuffling + dropout.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kValStream = 1;
constexpr std::uint64_t kTrainStream = 2;

std::vector<std::size_t> layer_plan(std::size_t input_width) {
    std::vector<std::size_t> sizes{input_width};
    for (auto h : MlpModel::kHiddenSizes) sizes.push_back(h);
    sizes.push_back(1);
    return sizes;
}

} // namespace

MlpModel::MlpModel(std::size_t input_width) : input_width_(input_width) {
    const auto sizes = layer_plan(input_width);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        weights_.emplace_back(sizes[l + 1], sizes[l]);
        biases_.emplace_back(sizes[l + 1], 0.0);
    }
}

double MlpModel::logit_row(std::span<const double> x) const {
    if (x.size() != input_width_) throw WidthMismatch(input_width_, x.size());
    std::vector<double> act(x.begin(), x.end());
    std::vector<double> next;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const auto& W = weights_[l];
        next.assign(W.rows(), 0.0);
        for (std::size_t i = 0; i < W.rows(); ++i) {
            double z = biases_[l][i];
            for (std::size_t j = 0; j < W.cols(); ++j) z += W(i, j) * act[j];
            next[i] = (l + 1 < weights_.size()) ? (z > 0.0 ? z : 0.0) : z;
        }
        act.swap(next);
    }
    return act[0];
}

double MlpModel::predict_row(std::span<const double> x) const { return sigmoid(logit_row(x)); }

std::vector<double> MlpModel::predict_proba(const Matrix& X) const {
    if (X.cols() != input_width_) throw WidthMismatch(input_width_, X.cols());
    std::vector<double> out(X.rows());
    for (std::size_t r = 0; r < X.rows(); ++r) out[r] = predict_row(X.row(r));
    return out;
}

std::vector<double> MlpModel::logit_gradient(std::span<const double> x) const {
    if (x.size() != input_width_) throw WidthMismatch(input_width_, x.size());
    const std::size_t L = weights_.size();

    // Forward pass, keeping pre-activations.
    std::vector<std::vector<double>> pre(L);
    std::vector<double> act(x.begin(), x.end());
    for (std::size_t l = 0; l < L; ++l) {
        const auto& W = weights_[l];
        pre[l].assign(W.rows(), 0.0);
        for (std::size_t i = 0; i < W.rows(); ++i) {
            double z = biases_[l][i];
            for (std::size_t j = 0; j < W.cols(); ++j) z += W(i, j) * act[j];
            pre[l][i] = z;
        }
        if (l + 1 < L) {
            act.resize(pre[l].size());
            for (std::size_t i = 0; i < act.size(); ++i) act[i] = pre[l][i] > 0 ? pre[l][i] : 0.0;
        }
    }

    // Backward: start from d(logit)/d(z_out) = 1.
    std::vector<double> delta{1.0};
    for (std::size_t l = L; l-- > 0;) {
        const auto& W = weights_[l];
        std::vector<double> grad_in(W.cols(), 0.0);
        for (std::size_t i = 0; i < W.rows(); ++i) {
            const double d = delta[i];
            if (d == 0.0) continue;
            for (std::size_t j = 0; j < W.cols(); ++j) grad_in[j] += d * W(i, j);
        }
        if (l > 0) {
            // Through the ReLU of the previous layer (derivative 0 at z == 0).
            for (std::size_t j = 0; j < grad_in.size(); ++j) {
                if (!(pre[l - 1][j] > 0.0)) grad_in[j] = 0.0;
            }
        }
        delta.swap(grad_in);
    }
    return delta;
}

std::vector<double> MlpModel::input_gradient(std::span<const double> x) const {
    auto grad = logit_gradient(x);
    const double p = predict_row(x);
    const double slope = p * (1.0 - p);
    for (auto& g : grad) g *= slope;
    return grad;
}

namespace {

struct AdamState {
    std::vector<Matrix> m_w, v_w;
    std::vector<std::vector<double>> m_b, v_b;
    std::size_t t = 0;

    explicit AdamState(const MlpModel& model) {
        for (std::size_t l = 0; l < model.layer_count(); ++l) {
            const auto& W = model.weights()[l];
            m_w.emplace_back(W.rows(), W.cols());
            v_w.emplace_back(W.rows(), W.cols());
            m_b.emplace_back(model.biases()[l].size(), 0.0);
            v_b.emplace_back(model.biases()[l].size(), 0.0);
        }
    }
};

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void adam_step(double& param, double grad, double& m, double& v, double lr, double bc1,
               double bc2) {
    m = kBeta1 * m + (1.0 - kBeta1) * grad;
    v = kBeta2 * v + (1.0 - kBeta2) * grad * grad;
    param -= lr * (m / bc1) / (std::sqrt(v / bc2) + kAdamEps);
}

struct BatchWorkspace {
    // Activations per layer for the current batch (rows = batch instances).
    std::vector<Matrix> act;      // act[0] = inputs, act[l+1] = layer l output
    std::vector<Matrix> pre;      // pre-activations per layer
    std::vector<Matrix> mask;     // dropout keep masks (already scaled)
    std::vector<Matrix> delta;    // backprop gradients per layer output
    std::vector<Matrix> grad_w;
    std::vector<std::vector<double>> grad_b;
};

} // namespace

MlpModel fit_mlp(const Matrix& X, const std::vector<int>& y, const ClassWeights& w,
                 const TrainConfig& cfg, MlpFitInfo* info) {
    cfg.validate();
    if (X.rows() != y.size()) throw LengthMismatch(X.rows(), y.size());
    if (X.rows() == 0 || X.cols() == 0) throw EmptyMatrix();
    bool has_pos = false, has_neg = false;
    for (int yi : y) (yi == 1 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw SingleClass();

    const std::size_t p = X.cols();
    MlpModel model(p);
    model.dropout_rate = cfg.dropout_rate;
    const std::size_t L = model.layer_count();

    // Glorot-uniform init from the seeded stream; biases stay zero.
    {
        Rng init_rng(derive_seed(cfg.seed, kInitStream));
        for (std::size_t l = 0; l < L; ++l) {
            auto& W = model.weights()[l];
            const double limit =
                std::sqrt(6.0 / static_cast<double>(W.rows() + W.cols()));
            for (std::size_t i = 0; i < W.rows(); ++i) {
                for (std::size_t j = 0; j < W.cols(); ++j) {
                    W(i, j) = init_rng.uniform_range(-limit, limit);
                }
            }
        }
    }

    // Stratified validation split for early stopping. Falls back to training
    // on everything when the fraction is 0 or a class would vanish.
    std::vector<std::size_t> train_idx, val_idx;
    {
        std::vector<std::size_t> neg, pos;
        for (std::size_t i = 0; i < y.size(); ++i) (y[i] == 1 ? pos : neg).push_back(i);
        Rng val_rng(derive_seed(cfg.seed, kValStream));
        bool usable = cfg.validation_fraction > 0.0;
        std::vector<std::size_t> candidate_val, candidate_train;
        if (usable) {
            for (auto* cls : {&neg, &pos}) {
                auto& idx = *cls;
                val_rng.shuffle(idx);
                const auto k = static_cast<std::size_t>(
                    std::llround(static_cast<double>(idx.size()) * cfg.validation_fraction));
                if (k == 0 || k >= idx.size()) {
                    usable = false;
                    break;
                }
                candidate_val.insert(candidate_val.end(), idx.begin(),
                                     idx.begin() + static_cast<long>(k));
                candidate_train.insert(candidate_train.end(), idx.begin() + static_cast<long>(k),
                                       idx.end());
            }
        }
        if (usable) {
            std::sort(candidate_train.begin(), candidate_train.end());
            std::sort(candidate_val.begin(), candidate_val.end());
            train_idx = std::move(candidate_train);
            val_idx = std::move(candidate_val);
        } else {
            train_idx.resize(y.size());
            std::iota(train_idx.begin(), train_idx.end(), 0);
        }
    }

    Matrix val_X;
    std::vector<int> val_y;
    if (!val_idx.empty()) {
        val_X = X.select_rows(val_idx);
        for (auto i : val_idx) val_y.push_back(y[i]);
    }

    Rng train_rng(derive_seed(cfg.seed, kTrainStream));
    AdamState adam(model);
    BatchWorkspace ws;
    ws.act.resize(L + 1);
    ws.pre.resize(L);
    ws.mask.resize(L);
    ws.delta.resize(L + 1);
    ws.grad_w.resize(L);
    ws.grad_b.resize(L);

    const double keep = 1.0 - cfg.dropout_rate;
    const bool use_dropout = cfg.dropout_rate > 0.0;

    double best_auc = -1.0;
    std::size_t wait = 0;
    bool early_stopped = false;
    std::vector<Matrix> best_weights;
    std::vector<std::vector<double>> best_biases;
    double last_epoch_loss = 0.0;
    std::size_t epochs_run = 0;

    std::vector<std::size_t> order = train_idx;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        ++epochs_run;
        train_rng.shuffle(order);
        double epoch_loss = 0.0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t b = std::min(cfg.batch_size, order.size() - start);

            // Forward
            ws.act[0] = Matrix(b, p);
            for (std::size_t r = 0; r < b; ++r) {
                const auto src = X.row(order[start + r]);
                auto dst = ws.act[0].row(r);
                std::copy(src.begin(), src.end(), dst.begin());
            }
            for (std::size_t l = 0; l < L; ++l) {
                const auto& W = model.weights()[l];
                ws.pre[l] = Matrix(b, W.rows());
                for (std::size_t r = 0; r < b; ++r) {
                    const auto in = ws.act[l].row(r);
                    for (std::size_t i = 0; i < W.rows(); ++i) {
                        double z = model.biases()[l][i];
                        const auto wrow = W.row(i);
                        for (std::size_t j = 0; j < wrow.size(); ++j) z += wrow[j] * in[j];
                        ws.pre[l](r, i) = z;
                    }
                }
                if (l + 1 < L) {
                    ws.act[l + 1] = Matrix(b, W.rows());
                    if (use_dropout) ws.mask[l] = Matrix(b, W.rows());
                    for (std::size_t r = 0; r < b; ++r) {
                        for (std::size_t i = 0; i < W.rows(); ++i) {
                            double a = ws.pre[l](r, i) > 0 ? ws.pre[l](r, i) : 0.0;
                            if (use_dropout) {
                                const double m =
                                    train_rng.bernoulli(keep) ? 1.0 / keep : 0.0;
                                ws.mask[l](r, i) = m;
                                a *= m;
                            }
                            ws.act[l + 1](r, i) = a;
                        }
                    }
                } else {
                    ws.act[l + 1] = ws.pre[l];
                }
            }

            // Loss and output gradient: mean over batch of w_y * bce.
            const double inv_b = 1.0 / static_cast<double>(b);
            ws.delta[L] = Matrix(b, 1);
            double batch_loss = 0.0;
            for (std::size_t r = 0; r < b; ++r) {
                const double z = ws.act[L](r, 0);
                const int label = y[order[start + r]];
                const double wy = w.of(label);
                batch_loss += wy * (softplus(z) - static_cast<double>(label) * z);
                ws.delta[L](r, 0) = wy * (sigmoid(z) - static_cast<double>(label)) * inv_b;
            }
            batch_loss *= inv_b;
            if (!std::isfinite(batch_loss)) throw NonFiniteLoss("mlp fit");
            epoch_loss += batch_loss * static_cast<double>(b);

            // Backward
            for (std::size_t l = L; l-- > 0;) {
                const auto& W = model.weights()[l];
                ws.grad_w[l] = Matrix(W.rows(), W.cols());
                ws.grad_b[l].assign(W.rows(), 0.0);
                for (std::size_t r = 0; r < b; ++r) {
                    const auto in = ws.act[l].row(r);
                    for (std::size_t i = 0; i < W.rows(); ++i) {
                        const double d = ws.delta[l + 1](r, i);
                        if (d == 0.0) continue;
                        auto grow = ws.grad_w[l].row(i);
                        for (std::size_t j = 0; j < in.size(); ++j) grow[j] += d * in[j];
                        ws.grad_b[l][i] += d;
                    }
                }
                if (l > 0) {
                    ws.delta[l] = Matrix(b, W.cols());
                    for (std::size_t r = 0; r < b; ++r) {
                        for (std::size_t j = 0; j < W.cols(); ++j) {
                            double g = 0.0;
                            for (std::size_t i = 0; i < W.rows(); ++i) {
                                g += ws.delta[l + 1](r, i) * W(i, j);
                            }
                            if (use_dropout) g *= ws.mask[l - 1](r, j);
                            if (!(ws.pre[l - 1](r, j) > 0.0)) g = 0.0;
                            ws.delta[l](r, j) = g;
                        }
                    }
                }
            }

            // Adam update
            ++adam.t;
            const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(adam.t));
            const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(adam.t));
            for (std::size_t l = 0; l < L; ++l) {
                auto& W = model.weights()[l];
                for (std::size_t i = 0; i < W.rows(); ++i) {
                    for (std::size_t j = 0; j < W.cols(); ++j) {
                        double g = ws.grad_w[l](i, j);
                        if (cfg.l2_penalty > 0) g += cfg.l2_penalty * W(i, j);
                        adam_step(W(i, j), g, adam.m_w[l](i, j), adam.v_w[l](i, j),
                                  cfg.learning_rate, bc1, bc2);
                    }
                    adam_step(model.biases()[l][i], ws.grad_b[l][i], adam.m_b[l][i],
                              adam.v_b[l][i], cfg.learning_rate, bc1, bc2);
                }
            }
        }
        last_epoch_loss = epoch_loss / static_cast<double>(order.size());

        // Early stopping on validation AUC.
        if (!val_idx.empty()) {
            const auto val_scores = model.predict_proba(val_X);
            const double val_auc = auc(val_scores, val_y);
            if (val_auc > best_auc) {
                best_auc = val_auc;
                best_weights = model.weights();
                best_biases = model.biases();
                wait = 0;
            } else if (++wait >= cfg.early_stop_patience) {
                early_stopped = true;
                break;
            }
        }
    }

    if (!best_weights.empty()) {
        model.weights() = best_weights;
        model.biases() = best_biases;
    }
    if (info) {
        info->epochs_run = epochs_run;
        info->best_validation_auc = best_auc;
        info->final_train_loss = last_epoch_loss;
        info->early_stopped = early_stopped;
    }
    return model;
}

} // namespace defectlens
