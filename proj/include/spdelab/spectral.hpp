#pragma once

#include <Eigen/Core>

#include "spdelab/noise.hpp"

namespace spdelab {

/// Exact eigen-representation of A = -d^2/dxi^2 with Dirichlet conditions on
/// (0,1): lambda_j = (j pi)^2, e_j(xi) = sqrt(2) sin(j pi xi). All operator
/// applications are diagonal in this basis.
struct SpectralModel {
    int modes = 0;
    Eigen::VectorXd eigenvalues;

    static SpectralModel dirichlet(int modes);

    double basis_value(int j, double xi) const;  // e_j(xi)
    /// Pointwise evaluation of sum c_j e_j at xi.
    double evaluate(const Eigen::VectorXd& coeffs, double xi) const;
};

using SpectralVector = Eigen::VectorXd;

/// S(t) x: coefficients e^{-lambda_j t} c_j. Rejects t < 0.
SpectralVector semigroup_apply(const SpectralModel& model, double t,
                               const SpectralVector& x);

/// A^rho x: coefficients lambda_j^rho c_j.
SpectralVector frac_power_apply(const SpectralModel& model, double rho,
                                const SpectralVector& x);

/// ||A^rho S(t)|| = max_j lambda_j^rho e^{-lambda_j t}. Rejects t <= 0, rho < 0.
double smoothing_probe(const SpectralModel& model, double rho, double t);

struct LqNorm {
    double value = 0.0;
    double error_estimate = 0.0;
    bool divergent = false;  // q at or above 2/(1-beta_max)
    bool converged = true;   // quadrature reached its tolerance
};

/// ||S||_{L^q([0,T],L_2^0)} = (int_0^T (Sum_j q_j e^{-2 lambda_j t})^{q/2} dt)^{1/q}
/// by graded Gauss quadrature; q = infinity gives sup_t (...)^{1/2} and
/// requires trace-class noise. Refuses (divergent flag) when q >= 2/(1-beta_max).
LqNorm semigroup_lq_norm(const SpectralModel& model, const NoiseModel& noise,
                         double q, double T);

/// Same norm with explicit weights in place of q_j; sigma_hint is the
/// singularity exponent used for the graded substitution.
LqNorm semigroup_lq_norm_weighted(const SpectralModel& model,
                                  const Eigen::VectorXd& weights, double q, double T,
                                  double sigma_hint);

/// Mode-wise closed form of ||S||_{L^2([0,T],L_2^0)}^2:
/// Sum_j q_j (1 - e^{-2 lambda_j T}) / (2 lambda_j). Oracle for the quadrature path.
double semigroup_l2_norm_sq_modewise(const SpectralModel& model,
                                     const NoiseModel& noise, double T);

}  // namespace spdelab
