#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "spdelab/noise.hpp"
#include "spdelab/spectral.hpp"

namespace spdelab {

struct Mesh {
    int interior_nodes = 0;  // M
    double spacing = 0.0;    // h = 1/(M+1)

    static Mesh uniform(int interior_nodes);
    double node(int i) const { return i * spacing; }  // i = 1..M
};

/// Piecewise-linear FEM operators on the uniform mesh: tridiagonal mass and
/// stiffness, the discrete operator A_h through the generalized
/// eigen-decomposition (stiffness, mass) with mass-orthonormal eigenvectors,
/// and the one-step solver S_{h,k} = (I + k A_h)^{-1} P_h.
class FemOperators {
  public:
    static FemOperators assemble(int interior_nodes);

    const Mesh& mesh() const { return mesh_; }
    int dim() const { return mesh_.interior_nodes; }

    // tridiagonal rows: (h/6)[1,4,1] and (1/h)[-1,2,-1]
    double mass_diag() const { return mass_diag_; }
    double mass_off() const { return mass_off_; }
    double stiff_diag() const { return stiff_diag_; }
    double stiff_off() const { return stiff_off_; }

    Eigen::VectorXd apply_mass(const Eigen::VectorXd& c) const;
    Eigen::VectorXd apply_stiffness(const Eigen::VectorXd& c) const;
    Eigen::VectorXd solve_mass(const Eigen::VectorXd& rhs) const;
    /// Solves (mass + k stiffness) c' = rhs. O(M) Thomas solve.
    Eigen::VectorXd solve_shifted(double k, const Eigen::VectorXd& rhs) const;

    double mass_norm(const Eigen::VectorXd& c) const;  // ||.||_{L^2} on V_h
    double mass_inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

    /// Generalized eigenpairs mu_j, v_j of (stiffness, mass), V^T M V = I.
    const Eigen::VectorXd& eigenvalues() const;
    const Eigen::MatrixXd& eigenvectors() const;
    /// Closed form (6/h^2)(1-cos(j pi h))/(2+cos(j pi h)) for the uniform mesh.
    double eigenvalue_closed_form(int j) const;

    /// A_h^rho c through the eigen-decomposition.
    Eigen::VectorXd ah_power(double rho, const Eigen::VectorXd& c) const;
    /// S_{h,k}^n restricted to V_h: c in eigen-coordinates scaled by (1+k mu)^-n.
    Eigen::VectorXd resolvent_power(double k, int n, const Eigen::VectorXd& c) const;

  private:
    Mesh mesh_;
    double mass_diag_ = 0, mass_off_ = 0, stiff_diag_ = 0, stiff_off_ = 0;
    mutable Eigen::VectorXd mu_;
    mutable Eigen::MatrixXd v_;
    void ensure_eigen() const;
};

/// G_{j,i} = <e_j, phi_i>, spectral basis against hat functions; closed form
/// sqrt(2) sin(j pi x_i) 2(1-cos(j pi h)) / (j pi)^2 h.
struct CrossGram {
    Eigen::MatrixXd g;  // modes x interior_nodes

    static CrossGram build(const SpectralModel& model, const Mesh& mesh);
    static double entry_closed_form(int j, const Mesh& mesh, int i);
};

/// Orthogonal projection P_h of a spectral function onto V_h:
/// mass c = G^T s.
Eigen::VectorXd project(const FemOperators& ops, const CrossGram& gram,
                        const SpectralVector& x);

/// One step of S_{h,k} on V_h coefficients: (mass + k stiffness) c' = mass c.
Eigen::VectorXd step_apply(const FemOperators& ops, double k,
                           const Eigen::VectorXd& c);

/// H-operator norm of a map V_h -> V_h given in coefficient space:
/// sqrt(lambda_max(T^T mass T, mass)).
double opnorm_on_vh(const Eigen::MatrixXd& op, const FemOperators& ops);
/// Same for a map written on spectral inputs (orthonormal source):
/// sqrt(lambda_max(T^T mass T)).
double opnorm_from_spectral(const Eigen::MatrixXd& op, const FemOperators& ops);

struct HsNorm {
    double value = 0.0;
    double tail_estimate = 0.0;
    bool truncation_warning = false;
};
/// (Sum_j q_j ||T e_j||^2)^{1/2} for T mapping spectral inputs to V_h
/// coefficients; the image norm is mass-weighted.
HsNorm hs_norm_q(const Eigen::MatrixXd& op_from_spectral, const FemOperators& ops,
                 const NoiseModel& noise);

/// ||S_{h,k}^n||_{L_2^0}^2 = Sum_j q_j Sum_i C_ij^2 (1+k mu_i)^{-2n},
/// with C = V^T G^T.
double shk_hs_norm_sq(const FemOperators& ops, const CrossGram& gram,
                      const NoiseModel& noise, double k, int n);
/// k Sum_{m=1}^{N} ||S_{h,k}^m||_{L_2^0}^2 in closed form (geometric series).
double shk_hs_geometric_sum(const FemOperators& ops, const CrossGram& gram,
                            const NoiseModel& noise, double k, int N);

/// ||A_h^{-rho} P_h A^{rho}|| over the spectral span of `model`.
double compat_norm(const FemOperators& ops, const CrossGram& gram,
                   const SpectralModel& model, double rho);

/// ||A_h^{rho} S_{h,k}^n|| = max_j mu_j^rho (1 + k mu_j)^{-n}.
double discrete_smoothing_norm(const FemOperators& ops, double rho, double k, int n);

/// ||E_{h,k}^n A^{rho/2}|| with E_{h,k}^n = S(nk) - S_{h,k}^n, evaluated on the
/// spectral span of `model` (pass ~4M modes; the semigroup tail is negligible
/// once e^{-lambda_J nk} <= 1e-12).
double error_operator_norm(const FemOperators& ops, const CrossGram& gram,
                           const SpectralModel& model, double rho, double k, int n);

/// ||A^{-gamma/2} Etilde_{h,k}(t) A^{(1-beta)/2}|| where
/// Etilde_{h,k}(t) = S(t) - S_{h,k}^{j+1} on t in (t_j, t_{j+1}]; grid points
/// use the right-limit convention (interval index j).
double negnorm_operator_norm(const FemOperators& ops, const CrossGram& gram,
                             const SpectralModel& model, double gamma, double beta,
                             double t, double k);

struct ProbeRow {
    double theta = 0, rho = 0, h = 0, k = 0;
    int n = 0;
    double t_n = 0, norm = 0, bound = 0, ratio = 0;
};

struct ProbeReport {
    std::vector<ProbeRow> rows;
    double max_ratio = 0.0;
    /// Log-log slope of the per-h (per-k) max ratio against refinement
    /// (abscissa 1/h resp. 1/k): positive = the ratio grows as the mesh or
    /// step refines, i.e. the bound is violated in trend.
    double growth_vs_h = 0.0;
    double growth_vs_k = 0.0;
};

/// Ratio sweep for the one-step error estimate (Assumption 2.2 / Lemma 5.1
/// range): bound (h^theta + k^{theta/2}) t_n^{-(theta+rho)/2}. Mesh sizes are
/// 1/(M+1) for M = 1/h - 1; each cell evaluates n over a dyadic set up to N(k).
ProbeReport assumption_probe(double theta, double rho,
                             const std::vector<int>& mesh_sizes,
                             const std::vector<double>& steps, double T,
                             int spectral_factor = 4);

/// Ratio sweep for the smoothing bound ||A_h^rho S_{h,k}^n|| <= C t_n^{-rho}.
ProbeReport smoothing_probe_discrete(double rho, const std::vector<int>& mesh_sizes,
                                     const std::vector<double>& steps, double T);

/// Ratio sweep for the negative-norm estimate, bound
/// (h^{2 gamma} + k^{gamma}) t^{(-1+beta-gamma)/2}.
ProbeReport negnorm_probe(double gamma, double beta,
                          const std::vector<int>& mesh_sizes,
                          const std::vector<double>& steps,
                          const std::vector<double>& times,
                          int spectral_factor = 4);

std::string probe_csv(const ProbeReport& report);

}  // namespace spdelab
