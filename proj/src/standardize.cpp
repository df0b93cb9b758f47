#include "defectlens/standardize.hpp"

#include <algorithm>
#include <cmath>

namespace defectlens {

Standardizer fit_standardizer(const Matrix& train_features) {
    if (train_features.rows() == 0) throw EmptyMatrix();
    const std::size_t n = train_features.rows();
    const std::size_t p = train_features.cols();

    Standardizer s;
    s.means.assign(p, 0.0);
    s.scales.assign(p, 1.0);

    for (std::size_t c = 0; c < p; ++c) {
        double sum = 0.0;
        double lo = train_features(0, c);
        double hi = lo;
        for (std::size_t r = 0; r < n; ++r) {
            const double v = train_features(r, c);
            sum += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        s.means[c] = sum / static_cast<double>(n);

        // A column whose values are all identical is constant even when the
        // accumulated mean is not exactly representable.
        if (lo == hi) {
            s.means[c] = lo;
            s.scales[c] = 1.0;
            continue;
        }

        double sq = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double d = train_features(r, c) - s.means[c];
            sq += d * d;
        }
        const double variance = sq / static_cast<double>(n);
        s.scales[c] = variance > 0.0 ? std::sqrt(variance) : 1.0;
    }
    return s;
}

Matrix Standardizer::transform(const Matrix& features) const {
    if (features.cols() != width()) throw WidthMismatch(width(), features.cols());
    Matrix out(features.rows(), features.cols());
    for (std::size_t r = 0; r < features.rows(); ++r) {
        for (std::size_t c = 0; c < features.cols(); ++c) {
            out(r, c) = (features(r, c) - means[c]) / scales[c];
        }
    }
    return out;
}

std::vector<double> Standardizer::transform_row(std::span<const double> row) const {
    if (row.size() != width()) throw WidthMismatch(width(), row.size());
    std::vector<double> out(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) out[c] = (row[c] - means[c]) / scales[c];
    return out;
}

Matrix Standardizer::inverse(const Matrix& standardized) const {
    if (standardized.cols() != width()) throw WidthMismatch(width(), standardized.cols());
    Matrix out(standardized.rows(), standardized.cols());
    for (std::size_t r = 0; r < standardized.rows(); ++r) {
        for (std::size_t c = 0; c < standardized.cols(); ++c) {
            out(r, c) = standardized(r, c) * scales[c] + means[c];
        }
    }
    return out;
}

Matrix apply_standardizer(const Standardizer& s, const Matrix& features) {
    return s.transform(features);
}

} // namespace defectlens
