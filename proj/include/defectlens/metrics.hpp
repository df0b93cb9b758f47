#pragma once

#include <cstddef>
#include <vector>

namespace defectlens {

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
};

struct EvalResult {
    double accuracy = 0.0;
    double auc = 0.0;
    Confusion confusion;
    double threshold = 0.5;

    // Table-style presentation: round(100 * value).
    int accuracy_pct() const;
    int auc_pct() const;
};

// Fraction of instances where (score >= threshold) matches the label.
double accuracy(const std::vector<double>& scores, const std::vector<int>& y, double threshold);

// Mann-Whitney AUC with midrank tie handling: probability a random positive
// outscores a random negative, ties counted one half.
double auc(const std::vector<double>& scores, const std::vector<int>& y);

Confusion confusion(const std::vector<double>& scores, const std::vector<int>& y,
                    double threshold);

EvalResult evaluate(const std::vector<double>& scores, const std::vector<int>& y,
                    double threshold = 0.5);

} // namespace defectlens
