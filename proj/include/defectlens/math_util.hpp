#pragma once

#include <cmath>
#include <span>

namespace defectlens {

// Logistic sigmoid clamped into the open interval (0,1) so probabilities
// never saturate to exactly 0 or 1 for finite inputs.
inline double sigmoid(double z) {
    double p;
    if (z >= 0) {
        p = 1.0 / (1.0 + std::exp(-z));
    } else {
        const double e = std::exp(z);
        p = e / (1.0 + e);
    }
    constexpr double lo = 1e-300;
    constexpr double hi = 1.0 - 1e-16;
    if (p < lo) return lo;
    if (p > hi) return hi;
    return p;
}

// log(1 + exp(z)) without overflow.
inline double softplus(double z) {
    if (z > 0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace defectlens
