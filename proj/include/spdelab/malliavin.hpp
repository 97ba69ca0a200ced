#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "spdelab/dynamics.hpp"
#include "spdelab/noise.hpp"

namespace spdelab {

// ---------------------------------------------------------------------------
// Discrete Malliavin derivative of the scheme
//
// Columns are images of the H_0-basis vectors sqrt(q_l) e_l; with that
// convention ||D^{(i)} X^n||_{L2^0}^2 is the plain sum of squared H-norms
// over l. Zero-weight modes are skipped.

struct DerivativeData {
    double k = 0.0;
    /// ||D^{(i)} X^N||_{L2^0}^2 per interval i = 0..N-1.
    Eigen::VectorXd interval_hs_sq;
    /// Final-time columns v[i] (dim x modes), kept on request.
    std::vector<Eigen::MatrixXd> columns;
};

/// Propagates every column jointly over the recorded path:
/// v_{i+1} = S_{h,k}(sqrt(q_l) e_l), then v_{n+1} = S_{h,k}(I + k F'(X^n)) v_n.
DerivativeData propagate_derivative(PathBackend& backend, const PathRecord& path,
                                    const NoiseModel& noise,
                                    bool keep_columns = false);

/// Dyadic interval subset {N-1, N-2, N-4, ...} down to 0 for the cost-control
/// subsampling of long paths (N > 128).
std::vector<int> dyadic_interval_subset(int intervals);

/// Propagates only the selected intervals' columns. `interval_hs_sq` keeps
/// full length with zeros off the subset.
DerivativeData propagate_derivative_subset(PathBackend& backend,
                                           const PathRecord& path,
                                           const NoiseModel& noise,
                                           const std::vector<int>& intervals);

/// (k Sum_i w_i ||D^{(i)}||^q)^{1/q} over a subset, each selected interval
/// standing in for the gap back to the previous selected one.
Eigen::VectorXd subset_time_weights(int intervals, const std::vector<int>& subset);

/// Single column (interval i, direction l in 1..J): the sequence v_n for
/// n = i+1..N. Used by the finite-difference and adaptedness tests.
std::vector<Eigen::VectorXd> propagate_derivative_column(PathBackend& backend,
                                                         const PathRecord& path,
                                                         const NoiseModel& noise,
                                                         int interval, int mode);

// ---------------------------------------------------------------------------
// Refined Sobolev-Malliavin norm estimation

struct SampleFunctionalData {
    double state_norm = 0.0;       // ||X^N||_H
    Eigen::VectorXd interval_hs;   // ||D^{(i)} X^N||_{L2^0} per interval
};

struct RefinedNormEstimate {
    double p = 0, q = 0;
    double estimate = 0.0;
    double std_error = 0.0;
    long samples = 0;
};

/// ( mean ||X||^p + mean (k Sum_i ||D^{(i)}X||^q)^{p/q} )^{1/p};
/// q = infinity uses max_i. Requires q >= 2 and >= 100 samples.
RefinedNormEstimate refined_norm(double p, double q, double k,
                                 const std::vector<SampleFunctionalData>& ensemble);

/// Deterministic D-part for F = 0: (k Sum_{m=1..N} ||S_{h,k}^m||_{L2^0}^q)^{1/q}.
double deterministic_d_part(const std::vector<double>& shk_hs_norms, double k,
                            double q);

// ---------------------------------------------------------------------------
// Cylindrical playground for the integration-by-parts identity and the dual
// Burkholder inequality. Everything lives on the discretized Wiener space:
// intervals i = 0..N-1 of length k, H_0 = R^modes with orthonormal
// coordinates, H = R^dim_h.

struct WienerGrid {
    int intervals = 0;
    int modes = 0;
    double k = 0.0;
    double horizon() const { return intervals * k; }
};

/// Y = psi * f(I(phi_1), ...) with f(z) = z, z1*z2, or z^3.
struct CylindricalVariable {
    enum class Kind { linear, product, cube };
    Kind kind = Kind::linear;
    std::string label;
    Eigen::VectorXd psi;   // H coordinates
    Eigen::MatrixXd phi1;  // H0-coordinates, modes x intervals
    Eigen::MatrixXd phi2;  // product kind only
};

/// Adapted rank-one piecewise-constant integrand Phi_i = c_i psi2 (x) eta.
struct AdaptedField {
    enum class Kind { deterministic, linear_past, singular };
    Kind kind = Kind::deterministic;
    std::string label;
    Eigen::VectorXd psi2;  // H coordinates
    Eigen::VectorXd eta;   // H0 coordinates
    Eigen::VectorXd coef;  // c_i for deterministic/singular kinds
    Eigen::MatrixXd phi3;  // linear_past: c_i = I_{t_i}(phi3)
    double sigma = 0.0;    // singular kind: c_i = interval average of (T-t)^-sigma

    static AdaptedField deterministic_field(const WienerGrid& grid,
                                            Eigen::VectorXd psi2, Eigen::VectorXd eta,
                                            Eigen::VectorXd coef);
    static AdaptedField linear_past_field(const WienerGrid& grid,
                                          Eigen::VectorXd psi2, Eigen::VectorXd eta,
                                          Eigen::MatrixXd phi3);
    static AdaptedField singular_field(const WienerGrid& grid, Eigen::VectorXd psi2,
                                       Eigen::VectorXd eta, double sigma);
};

struct IbpResult {
    double lhs = 0.0;  // MC mean of <Y, delta Phi>
    double rhs = 0.0;  // MC mean of Sum_i k <D^{(i)} Y, Phi_i>
    double discrepancy = 0.0;
    double pooled_se = 0.0;  // SE of the per-sample difference
    double lhs_analytic = 0.0;
    double rhs_analytic = 0.0;
    long samples = 0;
};

/// Both sides of (the discrete) Malliavin integration by parts, by MC and by
/// the Isserlis moment oracle.
IbpResult ibp_check(const WienerGrid& grid, const CylindricalVariable& y,
                    const AdaptedField& phi, long samples, std::uint64_t seed,
                    int workers = 1);

struct DualProbeRow {
    std::string y_label;
    std::string phi_label;
    double lhs = 0.0;       // |E <Y, delta Phi>|
    double lhs_se = 0.0;
    double phi_norm = 0.0;  // ||Phi||_{L^p'(Omega, L^q')}
    double y_norm = 0.0;    // ||Y||_{M^{1,p,q}}
    double ratio = 0.0;
    double ratio_se = 0.0;
    bool l2_time_bound_finite = true;  // the Lemma-2.2 side, continuum in time
};

struct DualProbeReport {
    double p = 0, q = 0;
    std::vector<DualProbeRow> rows;
    double max_ratio = 0.0;
};

/// |E<Y, delta Phi>| <= ||Phi||_{L^{p'}(Omega,L^{q'})} ||Y||_{M^{1,p,q}} over the
/// catalog; both sides MC-estimated on common samples.
DualProbeReport dual_burkholder_probe(const WienerGrid& grid, double p, double q,
                                      const AdaptedField& phi,
                                      const std::vector<CylindricalVariable>& ys,
                                      long samples, std::uint64_t seed,
                                      int workers = 1);

/// The fixed test catalog shared by the IBP suite and the dual probe.
struct CylindricalCatalog {
    WienerGrid grid;
    std::vector<CylindricalVariable> ys;
    AdaptedField phi_deterministic;
    AdaptedField phi_adapted;
    AdaptedField phi_singular;
};
CylindricalCatalog standard_catalog(int intervals, int modes, double T,
                                    double sigma = 0.75);

}  // namespace spdelab
