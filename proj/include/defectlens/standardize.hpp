#pragma once

#include <vector>

#include "defectlens/matrix.hpp"

namespace defectlens {

// Per-column (x - mean) / scale with population standard deviation as scale.
// Zero-variance columns get scale 1 so they map to 0, never NaN.
struct Standardizer {
    std::vector<double> means;
    std::vector<double> scales;

    std::size_t width() const { return means.size(); }

    Matrix transform(const Matrix& features) const;
    std::vector<double> transform_row(std::span<const double> row) const;
    Matrix inverse(const Matrix& standardized) const;
};

Standardizer fit_standardizer(const Matrix& train_features);
Matrix apply_standardizer(const Standardizer& s, const Matrix& features);

} // namespace defectlens
