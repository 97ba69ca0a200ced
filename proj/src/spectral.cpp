#include "spdelab/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "spdelab/quadrature.hpp"

namespace spdelab {

namespace {
constexpr double kPi = std::numbers::pi;
}

SpectralModel SpectralModel::dirichlet(int modes) {
    if (modes < 1) throw std::invalid_argument("spectral: modes must be >= 1");
    SpectralModel m;
    m.modes = modes;
    m.eigenvalues.resize(modes);
    for (int j = 1; j <= modes; ++j) m.eigenvalues[j - 1] = kPi * kPi * j * j;
    return m;
}

double SpectralModel::basis_value(int j, double xi) const {
    return std::sqrt(2.0) * std::sin(j * kPi * xi);
}

double SpectralModel::evaluate(const Eigen::VectorXd& coeffs, double xi) const {
    double v = 0.0;
    for (int j = 1; j <= static_cast<int>(coeffs.size()); ++j)
        v += coeffs[j - 1] * basis_value(j, xi);
    return v;
}

SpectralVector semigroup_apply(const SpectralModel& model, double t,
                               const SpectralVector& x) {
    if (t < 0.0) throw std::invalid_argument("semigroup_apply: t must be >= 0");
    return (-t * model.eigenvalues.array()).exp() * x.array();
}

SpectralVector frac_power_apply(const SpectralModel& model, double rho,
                                const SpectralVector& x) {
    return model.eigenvalues.array().pow(rho) * x.array();
}

double smoothing_probe(const SpectralModel& model, double rho, double t) {
    if (t <= 0.0) throw std::invalid_argument("smoothing_probe: t must be > 0");
    if (rho < 0.0) throw std::invalid_argument("smoothing_probe: rho must be >= 0");
    return (model.eigenvalues.array().pow(rho) * (-t * model.eigenvalues.array()).exp())
        .maxCoeff();
}

LqNorm semigroup_lq_norm_weighted(const SpectralModel& model,
                                  const Eigen::VectorXd& weights, double q, double T,
                                  double sigma_hint) {
    LqNorm out;
    auto trace_at = [&](double t) {
        return (weights.array() * (-2.0 * t * model.eigenvalues.array()).exp()).sum();
    };
    if (std::isinf(q)) {
        // sup over t is attained at t = 0 (every term decreasing)
        out.value = std::sqrt(trace_at(0.0));
        return out;
    }
    auto integrand = [&](double t) { return std::pow(trace_at(t), 0.5 * q); };
    const QuadratureResult r =
        graded_integral(integrand, T, std::min(sigma_hint, 0.999), 1e-11);
    out.value = std::pow(r.value, 1.0 / q);
    out.error_estimate = r.error_estimate / q * std::pow(r.value, 1.0 / q - 1.0);
    out.converged = r.converged;
    return out;
}

LqNorm semigroup_lq_norm(const SpectralModel& model, const NoiseModel& noise,
                         double q, double T) {
    if (q < 2.0) throw std::invalid_argument("semigroup_lq_norm: q must be >= 2");
    const double beta = noise.beta_max();
    LqNorm out;
    if (std::isinf(q)) {
        if (noise.alpha <= 1.0) {  // Sum q_j = infinity: not trace class
            out.divergent = true;
            return out;
        }
    } else if (beta < 1.0 && q >= 2.0 / (1.0 - beta)) {
        out.divergent = true;
        return out;
    }
    Eigen::VectorXd w =
        Eigen::Map<const Eigen::VectorXd>(noise.weights.data(), noise.modes);
    // trace ~ t^{-(1-beta)} near 0, so the integrand ~ t^{-q(1-beta)/2}
    const double sigma = std::isinf(q) ? 0.0 : 0.5 * q * (1.0 - beta);
    return semigroup_lq_norm_weighted(model, w, q, T, std::max(sigma, 0.0));
}

double semigroup_l2_norm_sq_modewise(const SpectralModel& model,
                                     const NoiseModel& noise, double T) {
    double sum = 0.0;
    for (int j = model.modes; j >= 1; --j) {
        const double lam = model.eigenvalues[j - 1];
        sum += noise.weights[j - 1] * (1.0 - std::exp(-2.0 * lam * T)) / (2.0 * lam);
    }
    return sum;
}

}  // namespace spdelab
