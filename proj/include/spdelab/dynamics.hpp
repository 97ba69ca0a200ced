#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "spdelab/dst.hpp"
#include "spdelab/fem.hpp"
#include "spdelab/noise.hpp"
#include "spdelab/spectral.hpp"

namespace spdelab {

/// Scalar drift f with derivatives; the Nemytskii operator is g -> f(g(.)).
struct DriftSpec {
    std::string name = "none";
    std::function<double(double)> f;
    std::function<double(double)> fprime;
    std::function<double(double)> fsecond;
    double fprime_bound = 0.0;
    double fsecond_bound = 0.0;
    bool zero = true;

    static DriftSpec none();
    static DriftSpec sine();
    static DriftSpec rational(double c);  // f = c/(1+x^2)
    static DriftSpec identity();          // unbounded f', testing only

    static DriftSpec by_name(const std::string& name);
    /// Checks |f'|, |f''| against the declared bounds on a sample grid.
    bool bounds_hold(double range = 50.0, int points = 2001) const;
};

struct SchemeConfig {
    double T = 1.0;
    int steps = 0;  // N; t_n = n k with k = T/N
    SpectralVector x0;
    std::vector<int> checkpoints;  // step indices, dyadic by default

    static SchemeConfig make(double T, int steps, SpectralVector x0);
    double dt() const { return T / steps; }
};

struct Trajectory {
    std::string backend;
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
};

/// Full path storage for Malliavin propagation (needs every realized state).
struct PathRecord {
    std::vector<Eigen::VectorXd> states;  // X^0 .. X^N
    double k = 0.0;
};

/// One-step interface shared by the spectral and FEM discretizations.
/// Instances hold scratch buffers and are owned by a single worker.
class PathBackend {
  public:
    virtual ~PathBackend() = default;
    virtual std::string tag() const = 0;
    virtual int dim() const = 0;
    virtual int noise_modes() const = 0;

    virtual Eigen::VectorXd initial_state(const SpectralVector& x0) = 0;
    /// S_{h,k}(state + k F(state) + dW), dW in spectral coordinates.
    virtual Eigen::VectorXd euler_step(double k, const Eigen::VectorXd& state,
                                       const Eigen::VectorXd& dw) = 0;
    /// S_{h,k} applied to a state-space vector.
    virtual Eigen::VectorXd apply_shk(double k, const Eigen::VectorXd& state) = 0;
    /// S_{h,k} applied to a spectral function (noise direction).
    virtual Eigen::VectorXd inject_noise(double k, const Eigen::VectorXd& dw) = 0;
    /// F'(X) v, the Nemytskii derivative at the realized state X.
    virtual Eigen::VectorXd drift_derivative_mult(const Eigen::VectorXd& x,
                                                  const Eigen::VectorXd& v) = 0;
    /// v <- S_{h,k}(I + k F'(x)) v applied to every column in place.
    virtual void derivative_step_batch(double k, const Eigen::VectorXd& x,
                                       Eigen::MatrixXd& cols);
    virtual Eigen::VectorXd nemytskii(const Eigen::VectorXd& state) = 0;

    virtual double h_norm(const Eigen::VectorXd& state) const = 0;
    /// ||state - ref||_H^2 against a spectral reference.
    virtual double diff_norm_sq_vs_spectral(const Eigen::VectorXd& ref,
                                            const Eigen::VectorXd& state) const = 0;
    virtual double functional_inner(const Eigen::VectorXd& psi_spectral,
                                    const Eigen::VectorXd& state) const = 0;
};

class SpectralBackend final : public PathBackend {
  public:
    SpectralBackend(SpectralModel model, DriftSpec drift, int grid_size = 0);

    std::string tag() const override { return "spectral"; }
    int dim() const override { return model_.modes; }
    int noise_modes() const override { return model_.modes; }
    int grid_size() const { return grid_; }

    Eigen::VectorXd initial_state(const SpectralVector& x0) override;
    Eigen::VectorXd euler_step(double k, const Eigen::VectorXd& state,
                               const Eigen::VectorXd& dw) override;
    Eigen::VectorXd apply_shk(double k, const Eigen::VectorXd& state) override;
    Eigen::VectorXd inject_noise(double k, const Eigen::VectorXd& dw) override;
    Eigen::VectorXd drift_derivative_mult(const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& v) override;
    void derivative_step_batch(double k, const Eigen::VectorXd& x,
                               Eigen::MatrixXd& cols) override;
    Eigen::VectorXd nemytskii(const Eigen::VectorXd& state) override;

    double h_norm(const Eigen::VectorXd& state) const override;
    double diff_norm_sq_vs_spectral(const Eigen::VectorXd& ref,
                                    const Eigen::VectorXd& state) const override;
    double functional_inner(const Eigen::VectorXd& psi,
                            const Eigen::VectorXd& state) const override;

    const SpectralModel& model() const { return model_; }

  private:
    SpectralModel model_;
    DriftSpec drift_;
    int grid_;
    SineTransform plan_;
    Eigen::VectorXd padded_, grid_vals_, grid_out_, coef_;

    void to_grid(const Eigen::VectorXd& coeffs, Eigen::VectorXd& vals);
    void to_coeffs(const Eigen::VectorXd& vals, Eigen::VectorXd& coeffs);
};

class FemBackend final : public PathBackend {
  public:
    FemBackend(std::shared_ptr<const FemOperators> ops,
               std::shared_ptr<const CrossGram> gram, DriftSpec drift);

    std::string tag() const override { return "fem"; }
    int dim() const override { return ops_->dim(); }
    int noise_modes() const override { return static_cast<int>(gram_->g.rows()); }

    Eigen::VectorXd initial_state(const SpectralVector& x0) override;
    Eigen::VectorXd euler_step(double k, const Eigen::VectorXd& state,
                               const Eigen::VectorXd& dw) override;
    Eigen::VectorXd apply_shk(double k, const Eigen::VectorXd& state) override;
    Eigen::VectorXd inject_noise(double k, const Eigen::VectorXd& dw) override;
    Eigen::VectorXd drift_derivative_mult(const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& v) override;
    Eigen::VectorXd nemytskii(const Eigen::VectorXd& state) override;

    double h_norm(const Eigen::VectorXd& state) const override;
    double diff_norm_sq_vs_spectral(const Eigen::VectorXd& ref,
                                    const Eigen::VectorXd& state) const override;
    double functional_inner(const Eigen::VectorXd& psi,
                            const Eigen::VectorXd& state) const override;

    const FemOperators& ops() const { return *ops_; }
    const CrossGram& gram() const { return *gram_; }

  private:
    std::shared_ptr<const FemOperators> ops_;
    std::shared_ptr<const CrossGram> gram_;
    DriftSpec drift_;
};

/// Iterates the semi-implicit Euler-Maruyama step from the projected or
/// truncated initial value; records the configured checkpoints. Increments
/// come from `table` at `level_m` when given, otherwise from the counter
/// stream at the scheme's own step. Aborts (with the step index) on
/// non-finite states.
Trajectory simulate_path(PathBackend& backend, const SchemeConfig& config,
                         const NoiseModel& noise, std::uint64_t seed,
                         std::uint64_t sample, const IncrementTable* table = nullptr,
                         int level_m = 1);

/// Same iteration, storing every state X^0..X^N.
PathRecord simulate_record(PathBackend& backend, const SchemeConfig& config,
                           const NoiseModel& noise, std::uint64_t seed,
                           std::uint64_t sample, const IncrementTable* table = nullptr,
                           int level_m = 1);

/// Exact-in-distribution sampler for the linear equation (F = 0): per mode
/// x_j(t+k) = e^{-lambda_j k} x_j(t) + N(0, q_j (1 - e^{-2 lambda_j k}) / (2 lambda_j)).
Trajectory exact_linear_sample(const SpectralModel& model, const NoiseModel& noise,
                               const SchemeConfig& config, std::uint64_t seed,
                               std::uint64_t sample);

struct SecondMoment {
    double exact = 0.0;     // Sum_j e^{-2 lam T} x0_j^2 + q_j (1-e^{-2 lam T})/(2 lam)
    double discrete = 0.0;  // ||S^N x0||^2 + k Sum_m ||S^m||_{L2^0}^2
};

SecondMoment second_moment_linear(const SpectralModel& model, const NoiseModel& noise,
                                  double T, long steps, const SpectralVector& x0);
SecondMoment second_moment_linear_fem(const FemOperators& ops, const CrossGram& gram,
                                      const NoiseModel& noise, double T, int steps,
                                      const SpectralVector& x0);

/// Checkpoint export: sample, t, backend, functional value, optional
/// coefficient list (semicolon-separated in one field).
std::string trajectory_csv(const std::vector<std::pair<long, Trajectory>>& paths,
                           const std::vector<double>& functional_values,
                           bool include_coefficients = false);

/// ||S_{h,k}^n||_{L2^0}^2 for the spectral scheme (diagonal).
double spectral_shk_hs_norm_sq(const SpectralModel& model, const NoiseModel& noise,
                               double k, long n);
double spectral_shk_hs_geometric_sum(const SpectralModel& model,
                                     const NoiseModel& noise, double k, long N);

}  // namespace spdelab
