#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "spdelab/dynamics.hpp"
#include "spdelab/fem.hpp"
#include "spdelab/noise.hpp"
#include "spdelab/spectral.hpp"

namespace spdelab {

// ---------------------------------------------------------------------------
// rate regression and the Gronwall utility

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_sum = 0.0;  // sum of squared log-residuals
    std::string abscissa;
    int points = 0;
};

/// Least squares on (log scale, log error); >= 3 points, positive values
/// (the offending row is named otherwise).
RateFit fit_rate(const std::vector<std::pair<double, double>>& points,
                 const std::string& abscissa = "scale");

double spearman_correlation(const std::vector<std::pair<double, double>>& points);

struct GronwallVerdict {
    bool hypothesis_holds = false;
    int first_violation = -1;  // n of the first failing inequality
    double constant = 0.0;     // smallest C with phi_n <= C C1 (1 + t_n^{-1+mu})
};

/// Termwise check of phi_n <= C1 (1 + t_n^{-1+mu}) + C2 k Sum_{j<n}
/// t_{n-j}^{-1+nu} phi_j, then the smallest conclusion constant.
/// `phi` holds phi_0..phi_N.
GronwallVerdict gronwall_check(const std::vector<double>& phi, double c1, double c2,
                               double mu, double nu, double k);

// ---------------------------------------------------------------------------
// test functionals

struct FunctionalSpec {
    enum class Kind { linear, squared_norm, norm_power, smoothed_exponential };
    Kind kind = Kind::squared_norm;
    Eigen::VectorXd psi;  // linear kind
    int half_power = 2;   // norm_power: phi = ||x||^{2m}

    static FunctionalSpec linear(Eigen::VectorXd psi);
    static FunctionalSpec squared_norm();
    static FunctionalSpec norm_power(int m);
    static FunctionalSpec smoothed_exponential();
    static FunctionalSpec by_name(const std::string& name, int modes);

    std::string name() const;
    int growth_degree() const;  // m in ||phi^(j)(x)|| <= C (1 + ||x||^{m-j})
    double eval(const PathBackend& backend, const Eigen::VectorXd& state) const;
    /// (||phi'(x)||, ||phi''(x)||) for the growth-bound check.
    std::pair<double, double> derivative_norms(double state_norm) const;
};

// ---------------------------------------------------------------------------
// error studies

struct ErrorRow {
    std::string experiment;
    std::string backend;
    double alpha = 0, beta = 0, gamma = 0;
    std::string functional;
    double h = 0, k = 0;
    long steps = 0;
    long samples = 0;
    double value = 0, std_error = 0;
    std::string flag;  // "", "inconclusive", ...
};

struct StudyProblem {
    double T = 1.0;
    DriftSpec drift;
    NoiseModel noise;
    SpectralVector x0;
};

struct ReferenceSpec {
    int steps = 4096;  // N_ref; must be a multiple of every tested N
};

/// max over dyadic checkpoints of (E ||X_ref(t) - X^n||^2)^{1/2}, spectral
/// backend at `modes` for both coarse and reference paths, common increments.
std::vector<ErrorRow> strong_error_k_sweep(const StudyProblem& prob, int modes,
                                           const std::vector<int>& step_counts,
                                           const ReferenceSpec& ref, long samples,
                                           std::uint64_t seed, int workers);

/// FEM meshes against the spectral reference at the same step count (common
/// noise), isolating the spatial error.
std::vector<ErrorRow> strong_error_h_sweep(const StudyProblem& prob,
                                           const std::vector<int>& mesh_sizes,
                                           int step_count, long samples,
                                           std::uint64_t seed, int workers);

/// Coupled weak-error estimate E[phi(X_ref) - phi(X^n)] with common random
/// numbers; for F = 0 the reference is the exact law conditionally coupled to
/// the increments, otherwise the scheme at ref.steps.
std::vector<ErrorRow> weak_error_mc_k_sweep(const StudyProblem& prob,
                                            const FunctionalSpec& functional,
                                            int modes,
                                            const std::vector<int>& step_counts,
                                            const ReferenceSpec& ref, long samples,
                                            std::uint64_t seed, int workers);

/// |exact - discrete| second moments, mode-matched (pure time error).
std::vector<ErrorRow> weak_error_exact_quadratic_k_sweep(
    const StudyProblem& prob, int modes, const std::vector<long>& step_counts);

/// |exact - time-exact FEM| second moments with self-similar noise truncation
/// J = 4/h (pure space error; the k column reads 0).
std::vector<ErrorRow> weak_error_exact_quadratic_h_sweep(
    const StudyProblem& prob, const std::vector<int>& mesh_sizes,
    int step_count = 0);

/// MC-free linear strong error of the time-exact FEM system against the
/// continuum under the same noise (Ito isometry, closed form).
std::vector<ErrorRow> strong_error_exact_linear_h_sweep(
    const StudyProblem& prob, const std::vector<int>& mesh_sizes);

/// ||W^A(T) - W^{A_h,N}||_{L^2(Omega, H^{-gamma})} via the Ito isometry,
/// closed-form time integrals per interval. Spectral (pure time error).
std::vector<ErrorRow> negnorm_exact_k_sweep(double gamma, const StudyProblem& prob,
                                            int modes,
                                            const std::vector<int>& step_counts);
/// Time-exact FEM convolution against the continuum one (pure space error).
std::vector<ErrorRow> negnorm_exact_h_sweep(double gamma, const StudyProblem& prob,
                                            const std::vector<int>& mesh_sizes,
                                            int step_count = 0);

/// Exact conditional OU reference at checkpoint `cp_fine_steps * k_fine`,
/// coupled to the fine increments of `table` (conditional mean per interval
/// plus one independent residual per mode).
Eigen::VectorXd exact_linear_reference(const SpectralModel& model,
                                       const NoiseModel& noise,
                                       const IncrementTable& table,
                                       int cp_fine_steps, const SpectralVector& x0,
                                       std::uint64_t seed, std::uint64_t sample,
                                       int cp_index);

struct MarkovHolderResult {
    RateFit fit;
    std::vector<ErrorRow> rows;
    bool inconclusive = false;  // some MC row had SE > 30% of the estimate
};

/// |E phi(X(t2)) - E phi(X(t1))| against |t2 - t1| near t2 = T; exact second
/// moments for phi = ||.||^2, F = 0.
MarkovHolderResult markov_holder_exact(double gamma, const StudyProblem& prob,
                                       int modes, const std::vector<double>& deltas);
MarkovHolderResult markov_holder_mc(double gamma, const StudyProblem& prob,
                                    const FunctionalSpec& functional, int modes,
                                    int steps, const std::vector<int>& delta_steps,
                                    long samples, std::uint64_t seed, int workers);

RateFit fit_from_rows(const std::vector<ErrorRow>& rows, const std::string& abscissa);

}  // namespace spdelab
