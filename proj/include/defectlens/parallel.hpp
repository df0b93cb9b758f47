#pragma once

#include <cstddef>

#if defined(DEFECTLENS_OPENMP)
#include <omp.h>
#endif

namespace defectlens {

enum class ExecMode { Serial, Parallel };

// Runs fn(i) for i in [0, n). In Parallel mode the iterations are distributed
// over OpenMP threads; callers must make iterations independent (per-index
// seeds, disjoint output slots) so both modes produce identical results.
template <typename Fn>
void parallel_for(std::size_t n, ExecMode mode, Fn&& fn) {
#if defined(DEFECTLENS_OPENMP)
    if (mode == ExecMode::Parallel) {
        const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < count; ++i) {
            fn(static_cast<std::size_t>(i));
        }
        return;
    }
#else
    (void)mode;
#endif
    for (std::size_t i = 0; i < n; ++i) fn(i);
}

inline int hardware_threads() {
#if defined(DEFECTLENS_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace defectlens
