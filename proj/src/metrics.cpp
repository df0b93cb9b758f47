#include "defectlens/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "defectlens/errors.hpp"

namespace defectlens {

int EvalResult::accuracy_pct() const { return static_cast<int>(std::lround(100.0 * accuracy)); }
int EvalResult::auc_pct() const { return static_cast<int>(std::lround(100.0 * auc)); }

double accuracy(const std::vector<double>& scores, const std::vector<int>& y, double threshold) {
    if (scores.size() != y.size()) throw LengthMismatch(scores.size(), y.size());
    if (scores.empty()) throw EmptyInput("accuracy");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int predicted = scores[i] >= threshold ? 1 : 0;
        correct += static_cast<std::size_t>(predicted == y[i]);
    }
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double auc(const std::vector<double>& scores, const std::vector<int>& y) {
    if (scores.size() != y.size()) throw LengthMismatch(scores.size(), y.size());
    std::size_t n_pos = 0;
    for (int yi : y) n_pos += static_cast<std::size_t>(yi == 1);
    const std::size_t n_neg = scores.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw SingleClass();

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Midranks: tied scores share the average of their 1-based rank range.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) {
            if (y[order[k]] == 1) rank_sum_pos += midrank;
        }
        i = j + 1;
    }

    const double np = static_cast<double>(n_pos);
    const double nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

Confusion confusion(const std::vector<double>& scores, const std::vector<int>& y,
                    double threshold) {
    if (scores.size() != y.size()) throw LengthMismatch(scores.size(), y.size());
    Confusion c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        if (predicted && y[i] == 1) ++c.tp;
        else if (predicted && y[i] == 0) ++c.fp;
        else if (!predicted && y[i] == 0) ++c.tn;
        else ++c.fn;
    }
    return c;
}

EvalResult evaluate(const std::vector<double>& scores, const std::vector<int>& y,
                    double threshold) {
    EvalResult result;
    result.threshold = threshold;
    result.accuracy = accuracy(scores, y, threshold);
    result.auc = auc(scores, y);
    result.confusion = confusion(scores, y, threshold);
    return result;
}

} // namespace defectlens
