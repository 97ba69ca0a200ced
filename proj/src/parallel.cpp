#include "spdelab/parallel.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

namespace spdelab {

void parallel_for(long n, int workers, const std::function<void(long)>& fn) {
    workers = std::max(1, workers);
    if (workers == 1 || n < 2) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (long i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

namespace {
double pairwise_rec(const double* v, long n) {
    if (n <= 8) {
        double s = 0.0;
        for (long i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const long half = n / 2;
    return pairwise_rec(v, half) + pairwise_rec(v + half, n - half);
}
}  // namespace

double pairwise_sum(std::span<const double> values) {
    return pairwise_rec(values.data(), static_cast<long>(values.size()));
}

double pairwise_mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return pairwise_sum(values) / static_cast<double>(values.size());
}

MeanEstimate mean_with_se(std::span<const double> values) {
    MeanEstimate e;
    e.samples = static_cast<long>(values.size());
    if (e.samples == 0) return e;
    e.mean = pairwise_mean(values);
    double var = 0.0;
    for (double v : values) var += (v - e.mean) * (v - e.mean);
    var /= std::max<long>(1, e.samples - 1);
    e.std_error = std::sqrt(var / e.samples);
    return e;
}

int resolve_workers(int requested) {
    if (const char* env = std::getenv("SPDELAB_WORKERS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return std::max(1, requested);
}

}  // namespace spdelab
