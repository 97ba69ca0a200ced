#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace spdelab {

/// Diagonal covariance for the cylindrical Q-Wiener process: weights
/// q_j = j^{-alpha} in the Dirichlet eigenbasis. beta_max = min(1, (1+alpha)/2)
/// is the largest admissible regularity parameter of the noise.
struct NoiseModel {
    double alpha = 0.0;
    int modes = 0;
    std::vector<double> weights;  // q_j, j = 1..modes

    static NoiseModel power_decay(double alpha, int modes);

    double beta_max() const;
    /// Sum_{j>modes} q_j / (2 lambda_j), the second-moment truncation bias bound.
    double truncation_bias_bound() const;
};

double admissible_beta(double alpha);

/// Partial-sum oracle for Sum_j lambda_j^{beta-1} q_j: dyadic block sums must
/// decay geometrically for a convergent series.
struct SeriesCheck {
    bool converged = false;
    double partial_sum = 0.0;
    double block_ratio = 0.0;  // last dyadic block over previous one
};
SeriesCheck beta_series_check(double alpha, double beta);

/// (Sum_{j<=J} lambda_j^{beta-1} q_j)^{1/2}; throws for beta outside the
/// admissible range (beta < beta_max, or beta = 1 with alpha > 1).
double weighted_hs_norm(const NoiseModel& noise, double beta);
/// Integral-comparison bound on the dropped tail of weighted_hs_norm^2.
double weighted_hs_tail_bound(const NoiseModel& noise, double beta);

/// Counter-based standard normal: a pure function of (seed, sample, n, j).
double normal_draw(std::uint64_t seed, std::uint64_t sample, std::uint64_t n,
                   std::uint64_t j);

/// Scaled fine increment of mode j over fine interval n:
/// sqrt(q_j) * sqrt(k_fine) * xi_{n,j}.
double fine_increment(const NoiseModel& noise, std::uint64_t seed,
                      std::uint64_t sample, int n, int j, double k_fine);

/// W-increment at level m (step k = m * k_fine): the left-to-right sum of the
/// m consecutive fine increments. Coordinates are H-coefficients along e_j.
Eigen::VectorXd increments(const NoiseModel& noise, std::uint64_t seed,
                           std::uint64_t sample, int level_m, int n, double k_fine,
                           int n_fine);

/// Memoized fine increments of one sample; coarse increments sum columns of
/// the same table, which makes refinement consistency exact.
class IncrementTable {
  public:
    IncrementTable(const NoiseModel& noise, std::uint64_t seed, std::uint64_t sample,
                   int n_fine, double k_fine);

    int n_fine() const { return static_cast<int>(fine_.cols()); }
    double k_fine() const { return k_fine_; }
    const Eigen::MatrixXd& fine() const { return fine_; }

    /// Level-m increment over coarse interval n (requires m | n_fine).
    Eigen::VectorXd increment(int level_m, int n) const;

  private:
    Eigen::MatrixXd fine_;  // modes x n_fine
    double k_fine_;
};

}  // namespace spdelab
