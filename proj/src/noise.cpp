#include "spdelab/noise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spdelab {

namespace {

constexpr double kPi = std::numbers::pi;

inline double lambda_of(double j) { return kPi * kPi * j * j; }

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline double to_unit(std::uint64_t x) {
    // strictly positive uniform in (0,1]
    return (static_cast<double>(x >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

NoiseModel NoiseModel::power_decay(double alpha, int modes) {
    if (alpha < 0.0) throw std::invalid_argument("noise: alpha must be >= 0");
    if (modes < 1) throw std::invalid_argument("noise: modes must be >= 1");
    NoiseModel m;
    m.alpha = alpha;
    m.modes = modes;
    m.weights.resize(modes);
    for (int j = 1; j <= modes; ++j)
        m.weights[j - 1] = std::pow(static_cast<double>(j), -alpha);
    return m;
}

double NoiseModel::beta_max() const { return admissible_beta(alpha); }

double NoiseModel::truncation_bias_bound() const {
    // Sum_{j>J} j^{-alpha} / (2 pi^2 j^2) <= integral comparison
    const double J = modes;
    const double p = alpha + 2.0;
    return std::pow(J, 1.0 - p) / ((p - 1.0) * 2.0 * kPi * kPi);
}

double admissible_beta(double alpha) {
    if (alpha < 0.0) throw std::invalid_argument("noise: alpha must be >= 0");
    return std::min(1.0, 0.5 * (1.0 + alpha));
}

SeriesCheck beta_series_check(double alpha, double beta) {
    // terms lambda_j^{beta-1} q_j = pi^{2(beta-1)} j^{2(beta-1)-alpha}
    SeriesCheck out;
    const double expo = 2.0 * (beta - 1.0) - alpha;
    double sum = 0.0;
    double prev_block = 0.0, block = 0.0;
    long lo = 1, hi = 2;
    for (int b = 0; b < 18; ++b) {
        block = 0.0;
        for (long j = lo; j < hi; ++j)
            block += std::pow(static_cast<double>(j), expo);
        sum += block;
        if (b > 0) out.block_ratio = block / prev_block;
        prev_block = block;
        lo = hi;
        hi *= 2;
    }
    out.partial_sum = std::pow(kPi, 2.0 * (beta - 1.0)) * sum;
    out.converged = out.block_ratio < 0.999;
    return out;
}

namespace {

bool beta_admissible(const NoiseModel& noise, double beta) {
    const double bm = noise.beta_max();
    if (beta < bm) return true;
    return beta == 1.0 && noise.alpha > 1.0;
}

}  // namespace

double weighted_hs_norm(const NoiseModel& noise, double beta) {
    if (!beta_admissible(noise, beta))
        throw std::invalid_argument(
            "weighted_hs_norm: Sum lambda_j^{beta-1} q_j diverges; "
            "beta must be < min(1,(1+alpha)/2) (Assumption 2.1 (iii))");
    double sum = 0.0;
    for (int j = noise.modes; j >= 1; --j)
        sum += std::pow(lambda_of(j), beta - 1.0) * noise.weights[j - 1];
    return std::sqrt(sum);
}

double weighted_hs_tail_bound(const NoiseModel& noise, double beta) {
    // integral comparison for Sum_{j>J} pi^{2(beta-1)} j^{2(beta-1)-alpha}
    const double p = noise.alpha + 2.0 * (1.0 - beta);
    if (p <= 1.0) return std::numeric_limits<double>::infinity();
    const double J = noise.modes;
    return std::pow(kPi, 2.0 * (beta - 1.0)) * std::pow(J, 1.0 - p) / (p - 1.0);
}

double normal_draw(std::uint64_t seed, std::uint64_t sample, std::uint64_t n,
                   std::uint64_t j) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ sample);
    h = mix64(h ^ n);
    h = mix64(h ^ j);
    const double u1 = to_unit(mix64(h ^ 0x5851f42d4c957f2dULL));
    const double u2 = to_unit(mix64(h ^ 0x14057b7ef767814fULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

double fine_increment(const NoiseModel& noise, std::uint64_t seed,
                      std::uint64_t sample, int n, int j, double k_fine) {
    return std::sqrt(noise.weights[j - 1] * k_fine) *
           normal_draw(seed, sample, static_cast<std::uint64_t>(n),
                       static_cast<std::uint64_t>(j));
}

Eigen::VectorXd increments(const NoiseModel& noise, std::uint64_t seed,
                           std::uint64_t sample, int level_m, int n, double k_fine,
                           int n_fine) {
    if (level_m < 1 || n_fine % level_m != 0)
        throw std::invalid_argument("increments: level must divide the finest level");
    const int n_coarse = n_fine / level_m;
    if (n < 0 || n >= n_coarse)
        throw std::out_of_range("increments: interval index out of range");
    Eigen::VectorXd dw = Eigen::VectorXd::Zero(noise.modes);
    for (int f = 0; f < level_m; ++f) {
        const int nf = n * level_m + f;
        for (int j = 1; j <= noise.modes; ++j)
            dw[j - 1] += fine_increment(noise, seed, sample, nf, j, k_fine);
    }
    return dw;
}

IncrementTable::IncrementTable(const NoiseModel& noise, std::uint64_t seed,
                               std::uint64_t sample, int n_fine, double k_fine)
    : fine_(noise.modes, n_fine), k_fine_(k_fine) {
    for (int n = 0; n < n_fine; ++n)
        for (int j = 1; j <= noise.modes; ++j)
            fine_(j - 1, n) = fine_increment(noise, seed, sample, n, j, k_fine);
}

Eigen::VectorXd IncrementTable::increment(int level_m, int n) const {
    const int nf = static_cast<int>(fine_.cols());
    if (level_m < 1 || nf % level_m != 0)
        throw std::invalid_argument("increments: level must divide the finest level");
    if (n < 0 || n >= nf / level_m)
        throw std::out_of_range("increments: interval index out of range");
    Eigen::VectorXd dw = fine_.col(n * level_m);
    for (int f = 1; f < level_m; ++f) dw += fine_.col(n * level_m + f);
    return dw;
}

}  // namespace spdelab
