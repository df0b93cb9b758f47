#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "defectlens/matrix.hpp"
#include "defectlens/model_io.hpp"
#include "defectlens/parallel.hpp"

namespace defectlens {

enum class AttributionMethod { IntegratedGradients, KernelShap, ExactShapley };

std::string to_string(AttributionMethod method);

struct AttributionVector {
    std::vector<double> values;
    std::vector<double> instance;
    std::vector<double> baseline; // IG reference point, or background mean row
    AttributionMethod method = AttributionMethod::IntegratedGradients;
    // |sum(values) - (F(x) - F(baseline or expected value))|
    double completeness_gap = 0.0;
};

enum class IgBaseline { ZeroInStandardizedSpace, Custom };
enum class IgTarget { Probability, Logit };

struct IgConfig {
    std::size_t steps = 64;
    IgBaseline baseline_kind = IgBaseline::ZeroInStandardizedSpace;
    std::vector<double> custom_baseline;
    IgTarget target = IgTarget::Probability;

    std::vector<double> baseline_for(std::size_t p) const;
};

// Black-box scoring function over one row of width p.
using PredictFn = std::function<double(std::span<const double>)>;

struct ShapConfig {
    Matrix background;
    std::size_t coalition_budget = 2048;
    std::size_t exact_threshold = 10; // enumerate all 2^p coalitions at or below
    std::uint64_t seed = 0;
};

// Midpoint-rule discretization of the path integral from the baseline to x.
// Exact for models with constant gradient, for any step count.
AttributionVector integrated_gradients(const Model& model, std::span<const double> x,
                                       const IgConfig& cfg);

// Shapley-kernel weighted least squares over coalitions, constrained so the
// attributions sum to v(full) - v(empty). Enumerates every coalition when
// p <= exact_threshold, otherwise fills whole coalition-size levels while the
// budget lasts and samples the remainder from the kernel distribution
// (coalitions paired with their complements).
AttributionVector kernel_shap(const PredictFn& predict, std::span<const double> x,
                              const ShapConfig& cfg);

// Brute-force Shapley values by full coalition enumeration (p <= 12).
// Independent oracle for kernel_shap.
AttributionVector exact_shapley(const PredictFn& predict, std::span<const double> x,
                                const Matrix& background);

PredictFn predict_fn_of(const Model& model);

// Batch attribution over dataset rows. Output order equals input order and
// per-instance sampling seeds are derived from the row index, so results are
// independent of the execution mode.
std::vector<AttributionVector> integrated_gradients_batch(const Model& model, const Matrix& rows,
                                                          const IgConfig& cfg,
                                                          ExecMode mode = ExecMode::Parallel);

std::vector<AttributionVector> kernel_shap_batch(const Model& model, const Matrix& rows,
                                                 const ShapConfig& cfg,
                                                 ExecMode mode = ExecMode::Parallel);

} // namespace defectlens
