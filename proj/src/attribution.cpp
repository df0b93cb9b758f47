#include "defectlens/attribution.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_map>

#include "defectlens/rng.hpp"

namespace defectlens {

std::string to_string(AttributionMethod method) {
    switch (method) {
        case AttributionMethod::IntegratedGradients: return "ig";
        case AttributionMethod::KernelShap: return "shap";
        case AttributionMethod::ExactShapley: return "exact_shapley";
    }
    return "ig";
}

std::vector<double> IgConfig::baseline_for(std::size_t p) const {
    if (baseline_kind == IgBaseline::ZeroInStandardizedSpace) {
        return std::vector<double>(p, 0.0);
    }
    if (custom_baseline.size() != p) throw WidthMismatch(p, custom_baseline.size());
    return custom_baseline;
}

AttributionVector integrated_gradients(const Model& model, std::span<const double> x,
                                       const IgConfig& cfg) {
    if (!is_differentiable(model)) throw NonDifferentiableModel(model_kind(model));
    if (cfg.steps < 1) throw ConfigError("ig steps must be >= 1");
    const std::size_t p = model_width(model);
    if (x.size() != p) throw WidthMismatch(p, x.size());

    const auto baseline = cfg.baseline_for(p);
    const bool on_logit = cfg.target == IgTarget::Logit;

    std::vector<double> avg_grad(p, 0.0);
    std::vector<double> point(p);
    const double m = static_cast<double>(cfg.steps);
    for (std::size_t k = 1; k <= cfg.steps; ++k) {
        const double alpha = (static_cast<double>(k) - 0.5) / m;
        for (std::size_t i = 0; i < p; ++i) {
            point[i] = baseline[i] + alpha * (x[i] - baseline[i]);
        }
        const auto grad = on_logit ? logit_gradient_of(model, point) : input_gradient(model, point);
        for (std::size_t i = 0; i < p; ++i) avg_grad[i] += grad[i];
    }

    AttributionVector out;
    out.method = AttributionMethod::IntegratedGradients;
    out.instance.assign(x.begin(), x.end());
    out.baseline = baseline;
    out.values.resize(p);
    double total = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        out.values[i] = (x[i] - baseline[i]) * avg_grad[i] / m;
        total += out.values[i];
    }
    const double fx = on_logit ? logit_row_of(model, x) : predict_row(model, x);
    const double fb = on_logit ? logit_row_of(model, baseline) : predict_row(model, baseline);
    out.completeness_gap = std::abs(total - (fx - fb));
    return out;
}

namespace {

double binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0.0;
    k = std::min(k, n - k);
    double result = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
        result = result * static_cast<double>(n - i) / static_cast<double>(i + 1);
    }
    return result;
}

// pi(s) = (p-1) / (C(p,s) * s * (p-s)) for 0 < s < p.
double shapley_kernel_weight(std::size_t p, std::size_t s) {
    return static_cast<double>(p - 1) /
           (binomial(p, s) * static_cast<double>(s) * static_cast<double>(p - s));
}

// Mean over background rows of predict(x on the coalition, background off it).
class CoalitionValue {
public:
    CoalitionValue(const PredictFn& predict, std::span<const double> x, const Matrix& background)
        : predict_(predict), x_(x), background_(background) {}

    double operator()(std::uint64_t mask) {
        auto it = cache_.find(mask);
        if (it != cache_.end()) return it->second;
        double sum = 0.0;
        std::vector<double> row(x_.size());
        for (std::size_t b = 0; b < background_.rows(); ++b) {
            const auto bg = background_.row(b);
            for (std::size_t i = 0; i < x_.size(); ++i) {
                row[i] = (mask >> i) & 1ULL ? x_[i] : bg[i];
            }
            sum += predict_(row);
        }
        const double value = sum / static_cast<double>(background_.rows());
        cache_.emplace(mask, value);
        return value;
    }

private:
    const PredictFn& predict_;
    std::span<const double> x_;
    const Matrix& background_;
    std::unordered_map<std::uint64_t, double> cache_;
};

// Solves G psi = rhs for symmetric positive definite G (tiny systems).
std::vector<double> solve_spd(std::vector<double> G, std::vector<double> rhs, std::size_t d) {
    // Cholesky with a ridge retry if the design happens to be rank-deficient.
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::vector<double> L(G);
        bool ok = true;
        for (std::size_t i = 0; i < d && ok; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double sum = L[i * d + j];
                for (std::size_t k = 0; k < j; ++k) sum -= L[i * d + k] * L[j * d + k];
                if (i == j) {
                    if (sum <= 0.0) {
                        ok = false;
                        break;
                    }
                    L[i * d + i] = std::sqrt(sum);
                } else {
                    L[i * d + j] = sum / L[j * d + j];
                }
            }
        }
        if (ok) {
            std::vector<double> z(d);
            for (std::size_t i = 0; i < d; ++i) {
                double sum = rhs[i];
                for (std::size_t k = 0; k < i; ++k) sum -= L[i * d + k] * z[k];
                z[i] = sum / L[i * d + i];
            }
            std::vector<double> psi(d);
            for (std::size_t i = d; i-- > 0;) {
                double sum = z[i];
                for (std::size_t k = i + 1; k < d; ++k) sum -= L[k * d + i] * psi[k];
                psi[i] = sum / L[i * d + i];
            }
            return psi;
        }
        double trace = 0.0;
        for (std::size_t i = 0; i < d; ++i) trace += G[i * d + i];
        const double ridge = std::max(1e-12 * trace / static_cast<double>(d), 1e-300);
        for (std::size_t i = 0; i < d; ++i) G[i * d + i] += ridge;
    }
    throw TrainError("kernel SHAP normal equations are singular");
}

struct WeightedCoalition {
    std::uint64_t mask;
    double weight;
};

// All coalitions of size s over p features, appended to out with weight w.
void enumerate_size(std::size_t p, std::size_t s, double w, std::vector<WeightedCoalition>& out) {
    std::vector<std::size_t> members(s);
    for (std::size_t i = 0; i < s; ++i) members[i] = i;
    while (true) {
        std::uint64_t mask = 0;
        for (auto m : members) mask |= 1ULL << m;
        out.push_back({mask, w});
        // next combination
        std::size_t i = s;
        while (i-- > 0) {
            if (members[i] + 1 <= p - (s - i)) {
                ++members[i];
                for (std::size_t j = i + 1; j < s; ++j) members[j] = members[j - 1] + 1;
                break;
            }
            if (i == 0) return;
        }
        if (members[0] > p - s) return;
    }
}

std::vector<WeightedCoalition> exact_design(std::size_t p) {
    std::vector<WeightedCoalition> rows;
    for (std::size_t s = 1; s < p; ++s) {
        enumerate_size(p, s, shapley_kernel_weight(p, s), rows);
    }
    return rows;
}

std::vector<WeightedCoalition> sampled_design(std::size_t p, std::size_t budget,
                                              std::uint64_t seed) {
    std::vector<WeightedCoalition> rows;
    std::size_t budget_left = std::max<std::size_t>(budget, 2);

    // Fill whole (s, p-s) levels while they fit in the budget.
    std::size_t first_unfilled = p; // first size not fully enumerated
    for (std::size_t s = 1; s <= p / 2; ++s) {
        const std::size_t other = p - s;
        const double count =
            binomial(p, s) + (other != s ? binomial(p, other) : 0.0);
        if (count > static_cast<double>(budget_left)) {
            first_unfilled = s;
            break;
        }
        enumerate_size(p, s, shapley_kernel_weight(p, s), rows);
        if (other != s) enumerate_size(p, other, shapley_kernel_weight(p, other), rows);
        budget_left -= static_cast<std::size_t>(count);
    }
    if (first_unfilled > p / 2) return rows; // everything enumerated

    // Sample the remaining sizes from the kernel distribution, paired with
    // complements; each sampled row carries an equal share of the leftover
    // kernel mass.
    std::vector<std::size_t> sizes;
    std::vector<double> cumulative;
    double remaining_mass = 0.0;
    for (std::size_t s = first_unfilled; s <= p - first_unfilled; ++s) {
        const double mass = static_cast<double>(p - 1) /
                            (static_cast<double>(s) * static_cast<double>(p - s));
        remaining_mass += mass;
        sizes.push_back(s);
        cumulative.push_back(remaining_mass);
    }

    Rng rng(seed);
    const std::size_t n_pairs = std::max<std::size_t>(budget_left / 2, 1);
    const std::size_t sample_start = rows.size();
    const std::uint64_t full_mask = p == 64 ? ~0ULL : ((1ULL << p) - 1);
    for (std::size_t k = 0; k < n_pairs; ++k) {
        const double u = rng.uniform() * remaining_mass;
        std::size_t pick = 0;
        while (pick + 1 < cumulative.size() && u > cumulative[pick]) ++pick;
        const std::size_t s = sizes[pick];
        std::uint64_t mask = 0;
        for (auto i : rng.sample_indices(p, s)) mask |= 1ULL << i;
        rows.push_back({mask, 0.0});
        rows.push_back({full_mask & ~mask, 0.0});
    }
    const double per_row =
        remaining_mass / static_cast<double>(rows.size() - sample_start);
    for (std::size_t i = sample_start; i < rows.size(); ++i) rows[i].weight = per_row;
    return rows;
}

AttributionVector solve_kernel_shap(const PredictFn& predict, std::span<const double> x,
                                    const Matrix& background,
                                    const std::vector<WeightedCoalition>& rows) {
    const std::size_t p = x.size();
    CoalitionValue value(predict, x, background);
    const std::uint64_t full_mask = p == 64 ? ~0ULL : ((1ULL << p) - 1);
    const double v_empty = value(0);
    const double v_full = value(full_mask);
    const double efficiency = v_full - v_empty;

    AttributionVector out;
    out.method = AttributionMethod::KernelShap;
    out.instance.assign(x.begin(), x.end());
    out.baseline.resize(p, 0.0);
    for (std::size_t b = 0; b < background.rows(); ++b) {
        const auto bg = background.row(b);
        for (std::size_t i = 0; i < p; ++i) out.baseline[i] += bg[i];
    }
    for (auto& v : out.baseline) v /= static_cast<double>(background.rows());

    if (p == 1) {
        out.values = {efficiency};
        out.completeness_gap = 0.0;
        return out;
    }

    // Eliminate the last feature via the efficiency constraint, then solve
    // the weighted normal equations for the rest.
    const std::size_t d = p - 1;
    std::vector<double> G(d * d, 0.0);
    std::vector<double> rhs(d, 0.0);
    std::vector<double> a(d);
    for (const auto& row : rows) {
        const double z_last = static_cast<double>((row.mask >> (p - 1)) & 1ULL);
        for (std::size_t i = 0; i < d; ++i) {
            a[i] = static_cast<double>((row.mask >> i) & 1ULL) - z_last;
        }
        const double target = value(row.mask) - v_empty - z_last * efficiency;
        for (std::size_t i = 0; i < d; ++i) {
            if (a[i] == 0.0) continue;
            rhs[i] += row.weight * target * a[i];
            for (std::size_t j = 0; j <= i; ++j) {
                G[i * d + j] += row.weight * a[i] * a[j];
            }
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) G[i * d + j] = G[j * d + i];
    }

    const auto psi = solve_spd(std::move(G), std::move(rhs), d);
    out.values.assign(p, 0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        out.values[i] = psi[i];
        sum += psi[i];
    }
    out.values[p - 1] = efficiency - sum;
    double total = 0.0;
    for (double v : out.values) total += v;
    out.completeness_gap = std::abs(total - efficiency);
    return out;
}

} // namespace

AttributionVector kernel_shap(const PredictFn& predict, std::span<const double> x,
                              const ShapConfig& cfg) {
    const std::size_t p = x.size();
    if (p == 0) throw EmptyInput("kernel_shap instance");
    if (p > 63) throw TooManyFeatures(p, 63);
    if (cfg.background.rows() == 0) throw EmptyInput("kernel_shap background");
    if (cfg.background.cols() != p) throw WidthMismatch(p, cfg.background.cols());
    if (cfg.exact_threshold > 14) throw ConfigError("exact_threshold must be <= 14");
    if (cfg.coalition_budget < 2) throw ConfigError("coalition_budget must be >= 2");

    const auto rows = p <= cfg.exact_threshold ? exact_design(p)
                                               : sampled_design(p, cfg.coalition_budget, cfg.seed);
    return solve_kernel_shap(predict, x, cfg.background, rows);
}

AttributionVector exact_shapley(const PredictFn& predict, std::span<const double> x,
                                const Matrix& background) {
    const std::size_t p = x.size();
    constexpr std::size_t kLimit = 12;
    if (p == 0) throw EmptyInput("exact_shapley instance");
    if (p > kLimit) throw TooManyFeatures(p, kLimit);
    if (background.rows() == 0) throw EmptyInput("exact_shapley background");
    if (background.cols() != p) throw WidthMismatch(p, background.cols());

    CoalitionValue value(predict, x, background);
    const std::uint64_t n_masks = 1ULL << p;

    std::vector<double> v(n_masks);
    for (std::uint64_t mask = 0; mask < n_masks; ++mask) v[mask] = value(mask);

    std::vector<double> factorial(p + 1, 1.0);
    for (std::size_t i = 1; i <= p; ++i) {
        factorial[i] = factorial[i - 1] * static_cast<double>(i);
    }

    AttributionVector out;
    out.method = AttributionMethod::ExactShapley;
    out.instance.assign(x.begin(), x.end());
    out.baseline.resize(p, 0.0);
    for (std::size_t b = 0; b < background.rows(); ++b) {
        const auto bg = background.row(b);
        for (std::size_t i = 0; i < p; ++i) out.baseline[i] += bg[i];
    }
    for (auto& bv : out.baseline) bv /= static_cast<double>(background.rows());

    out.values.assign(p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        const std::uint64_t bit = 1ULL << i;
        double phi = 0.0;
        for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
            if (mask & bit) continue;
            const auto s = static_cast<std::size_t>(std::popcount(mask));
            const double w = factorial[s] * factorial[p - s - 1] / factorial[p];
            phi += w * (v[mask | bit] - v[mask]);
        }
        out.values[i] = phi;
    }

    double total = 0.0;
    for (double val : out.values) total += val;
    out.completeness_gap = std::abs(total - (v[n_masks - 1] - v[0]));
    return out;
}

PredictFn predict_fn_of(const Model& model) {
    return [&model](std::span<const double> row) { return predict_row(model, row); };
}

std::vector<AttributionVector> integrated_gradients_batch(const Model& model, const Matrix& rows,
                                                          const IgConfig& cfg, ExecMode mode) {
    if (!is_differentiable(model)) throw NonDifferentiableModel(model_kind(model));
    std::vector<AttributionVector> out(rows.rows());
    parallel_for(rows.rows(), mode,
                 [&](std::size_t r) { out[r] = integrated_gradients(model, rows.row(r), cfg); });
    return out;
}

std::vector<AttributionVector> kernel_shap_batch(const Model& model, const Matrix& rows,
                                                 const ShapConfig& cfg, ExecMode mode) {
    std::vector<AttributionVector> out(rows.rows());
    parallel_for(rows.rows(), mode, [&](std::size_t r) {
        ShapConfig per_instance = cfg;
        per_instance.seed = derive_seed(cfg.seed, r);
        const auto predict = predict_fn_of(model);
        out[r] = kernel_shap(predict, rows.row(r), per_instance);
    });
    return out;
}

} // namespace defectlens
