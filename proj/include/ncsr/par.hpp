#pragma once

/// Minimal parallel-for used by verification and scan kernels: OpenMP when
/// compiled in (NCSR_HAVE_OPENMP), plain loop otherwise or on request.
/// Callers must write results into disjoint per-index slots so the merged
/// output is identical across policies and thread counts.

namespace ncsr::par {

enum class Policy { kSerial, kAuto };

template <class F>
void parallel_for(int n, F&& f, Policy policy = Policy::kAuto) {
#ifdef NCSR_HAVE_OPENMP
  if (policy == Policy::kAuto) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
#else
  (void)policy;
#endif
  for (int i = 0; i < n; ++i) f(i);
}

}  // namespace ncsr::par
