#pragma once

#include <functional>
#include <span>
#include <vector>

namespace spdelab {

/// Runs fn(i) for i in [0, n) on `workers` threads (strided partition).
/// Results must be written to per-index slots; numeric output is then
/// independent of the worker count.
void parallel_for(long n, int workers, const std::function<void(long)>& fn);

/// Fixed-order pairwise summation; deterministic reduction for MC means.
double pairwise_sum(std::span<const double> values);
double pairwise_mean(std::span<const double> values);

struct MeanEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long samples = 0;
};
MeanEstimate mean_with_se(std::span<const double> values);

int resolve_workers(int requested);  // env SPDELAB_WORKERS overrides

}  // namespace spdelab
