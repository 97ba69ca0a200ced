#pragma once

#include <functional>

namespace spdelab {

/// Composite Gauss-Legendre (8 nodes per panel) on [a,b].
double gauss_composite(const std::function<double(double)>& f, double a, double b,
                       int panels);

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;  // from panel doubling
    bool converged = true;
};

/// Integrates f over (0,T] where f(t) ~ t^{-sigma} near 0, sigma in [0,1).
/// Substitutes t = u^{1/(1-sigma)} so the transformed integrand is bounded,
/// then applies composite Gauss with panel doubling until the estimate
/// settles below rel_tol (at least 64 panels).
QuadratureResult graded_integral(const std::function<double(double)>& f, double T,
                                 double sigma, double rel_tol = 1e-10);

/// Adaptive Simpson on [a,b] to absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol);

}  // namespace spdelab
