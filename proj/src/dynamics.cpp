#include "spdelab/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace spdelab {

DriftSpec DriftSpec::none() {
    DriftSpec d;
    d.name = "none";
    d.f = [](double) { return 0.0; };
    d.fprime = [](double) { return 0.0; };
    d.fsecond = [](double) { return 0.0; };
    d.zero = true;
    return d;
}

DriftSpec DriftSpec::sine() {
    DriftSpec d;
    d.name = "sin";
    d.f = [](double x) { return std::sin(x); };
    d.fprime = [](double x) { return std::cos(x); };
    d.fsecond = [](double x) { return -std::sin(x); };
    d.fprime_bound = 1.0;
    d.fsecond_bound = 1.0;
    d.zero = false;
    return d;
}

DriftSpec DriftSpec::rational(double c) {
    DriftSpec d;
    d.name = "rational";
    d.f = [c](double x) { return c / (1.0 + x * x); };
    d.fprime = [c](double x) {
        const double u = 1.0 + x * x;
        return -2.0 * c * x / (u * u);
    };
    d.fsecond = [c](double x) {
        const double u = 1.0 + x * x;
        return c * (6.0 * x * x - 2.0) / (u * u * u);
    };
    d.fprime_bound = 0.65 * std::abs(c);   // max of |2x|/(1+x^2)^2 = 3sqrt(3)/8
    d.fsecond_bound = 2.0 * std::abs(c);   // attained at x = 0
    d.zero = c == 0.0;
    return d;
}

DriftSpec DriftSpec::identity() {
    DriftSpec d;
    d.name = "identity";
    d.f = [](double x) { return x; };
    d.fprime = [](double) { return 1.0; };
    d.fsecond = [](double) { return 0.0; };
    d.fprime_bound = 1.0;
    d.zero = false;
    return d;
}

DriftSpec DriftSpec::by_name(const std::string& name) {
    if (name == "none" || name.empty()) return none();
    if (name == "sin") return sine();
    if (name == "rational") return rational(1.0);
    if (name == "identity") return identity();
    throw std::invalid_argument("unknown drift: " + name);
}

bool DriftSpec::bounds_hold(double range, int points) const {
    if (zero) return true;
    for (int i = 0; i < points; ++i) {
        const double x = -range + 2.0 * range * i / (points - 1);
        if (std::abs(fprime(x)) > fprime_bound * (1.0 + 1e-12)) return false;
        if (fsecond && fsecond_bound > 0.0 &&
            std::abs(fsecond(x)) > fsecond_bound * (1.0 + 1e-12))
            return false;
    }
    return true;
}

SchemeConfig SchemeConfig::make(double T, int steps, SpectralVector x0) {
    if (T <= 0.0) throw std::invalid_argument("scheme: T must be > 0");
    if (steps < 1) throw std::invalid_argument("scheme: steps must be >= 1");
    if (T / steps >= 1.0 && steps > 1)
        throw std::invalid_argument("scheme: k = T/N must lie in (0,1)");
    SchemeConfig c;
    c.T = T;
    c.steps = steps;
    c.x0 = std::move(x0);
    if (steps % 8 == 0)
        c.checkpoints = {steps / 8, steps / 4, steps / 2, steps};
    else
        c.checkpoints = {steps};
    return c;
}

void PathBackend::derivative_step_batch(double k, const Eigen::VectorXd& x,
                                        Eigen::MatrixXd& cols) {
    for (int c = 0; c < cols.cols(); ++c) {
        Eigen::VectorXd v = cols.col(c);
        v += k * drift_derivative_mult(x, v);
        cols.col(c) = apply_shk(k, v);
    }
}

// ---------------------------------------------------------------------------
// spectral backend

SpectralBackend::SpectralBackend(SpectralModel model, DriftSpec drift, int grid_size)
    : model_(std::move(model)),
      drift_(std::move(drift)),
      grid_(grid_size > 0 ? grid_size
                          : SineTransform::fast_size_at_least(2 * model_.modes + 1)),
      plan_(grid_) {
    if (grid_ < 2 * model_.modes + 1)
        throw std::invalid_argument(
            "spectral backend: grid must be >= 2*modes+1 (dealiasing)");
    padded_.resize(grid_);
    grid_vals_.resize(grid_);
    grid_out_.resize(grid_);
    coef_.resize(grid_);
}

void SpectralBackend::to_grid(const Eigen::VectorXd& coeffs, Eigen::VectorXd& vals) {
    padded_.setZero();
    padded_.head(coeffs.size()) = std::sqrt(2.0) * coeffs;
    plan_.forward(padded_, vals);
}

void SpectralBackend::to_coeffs(const Eigen::VectorXd& vals, Eigen::VectorXd& coeffs) {
    plan_.forward(vals, coef_);
    coeffs = std::sqrt(2.0) / (grid_ + 1) * coef_.head(model_.modes);
}

Eigen::VectorXd SpectralBackend::initial_state(const SpectralVector& x0) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(model_.modes);
    s.head(std::min<int>(x0.size(), model_.modes)) =
        x0.head(std::min<int>(x0.size(), model_.modes));
    return s;
}

Eigen::VectorXd SpectralBackend::nemytskii(const Eigen::VectorXd& state) {
    if (drift_.zero) return Eigen::VectorXd::Zero(state.size());
    to_grid(state, grid_vals_);
    for (int g = 0; g < grid_; ++g) grid_vals_[g] = drift_.f(grid_vals_[g]);
    Eigen::VectorXd out;
    to_coeffs(grid_vals_, out);
    return out;
}

Eigen::VectorXd SpectralBackend::euler_step(double k, const Eigen::VectorXd& state,
                                            const Eigen::VectorXd& dw) {
    Eigen::VectorXd v = state;
    if (!drift_.zero) v += k * nemytskii(state);
    v += dw.head(model_.modes);
    v.array() /= (1.0 + k * model_.eigenvalues.array());
    return v;
}

Eigen::VectorXd SpectralBackend::apply_shk(double k, const Eigen::VectorXd& state) {
    return (state.array() / (1.0 + k * model_.eigenvalues.array())).matrix();
}

Eigen::VectorXd SpectralBackend::inject_noise(double k, const Eigen::VectorXd& dw) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(model_.modes);
    const int n = std::min<int>(dw.size(), model_.modes);
    v.head(n) = dw.head(n);
    return apply_shk(k, v);
}

Eigen::VectorXd SpectralBackend::drift_derivative_mult(const Eigen::VectorXd& x,
                                                       const Eigen::VectorXd& v) {
    if (drift_.zero) return Eigen::VectorXd::Zero(v.size());
    to_grid(x, grid_vals_);
    to_grid(v, grid_out_);
    for (int g = 0; g < grid_; ++g)
        grid_out_[g] *= drift_.fprime(grid_vals_[g]);
    Eigen::VectorXd out;
    to_coeffs(grid_out_, out);
    return out;
}

void SpectralBackend::derivative_step_batch(double k, const Eigen::VectorXd& x,
                                            Eigen::MatrixXd& cols) {
    const Eigen::ArrayXd resolvent = 1.0 / (1.0 + k * model_.eigenvalues.array());
    if (drift_.zero) {
        cols.array().colwise() *= resolvent;
        return;
    }
    to_grid(x, grid_vals_);  // shared across columns
    for (int g = 0; g < grid_; ++g) grid_vals_[g] = drift_.fprime(grid_vals_[g]);
    Eigen::VectorXd coeffs;
    for (int c = 0; c < cols.cols(); ++c) {
        to_grid(cols.col(c), grid_out_);
        grid_out_.array() *= grid_vals_.array();
        to_coeffs(grid_out_, coeffs);
        cols.col(c) += k * coeffs;
        cols.col(c).array() *= resolvent;
    }
}

double SpectralBackend::h_norm(const Eigen::VectorXd& state) const {
    return state.norm();
}

double SpectralBackend::diff_norm_sq_vs_spectral(const Eigen::VectorXd& ref,
                                                 const Eigen::VectorXd& state) const {
    const int n = std::max<int>(ref.size(), state.size());
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double a = i < ref.size() ? ref[i] : 0.0;
        const double b = i < state.size() ? state[i] : 0.0;
        sum += (a - b) * (a - b);
    }
    return sum;
}

double SpectralBackend::functional_inner(const Eigen::VectorXd& psi,
                                         const Eigen::VectorXd& state) const {
    const int n = std::min<int>(psi.size(), state.size());
    return psi.head(n).dot(state.head(n));
}

// ---------------------------------------------------------------------------
// FEM backend

FemBackend::FemBackend(std::shared_ptr<const FemOperators> ops,
                       std::shared_ptr<const CrossGram> gram, DriftSpec drift)
    : ops_(std::move(ops)), gram_(std::move(gram)), drift_(std::move(drift)) {}

Eigen::VectorXd FemBackend::initial_state(const SpectralVector& x0) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(gram_->g.rows());
    s.head(std::min<int>(x0.size(), s.size())) =
        x0.head(std::min<int>(x0.size(), s.size()));
    return project(*ops_, *gram_, s);
}

Eigen::VectorXd FemBackend::nemytskii(const Eigen::VectorXd& state) {
    if (drift_.zero) return Eigen::VectorXd::Zero(state.size());
    return state.unaryExpr(drift_.f);
}

Eigen::VectorXd FemBackend::euler_step(double k, const Eigen::VectorXd& state,
                                       const Eigen::VectorXd& dw) {
    Eigen::VectorXd v = state;
    if (!drift_.zero) v += k * nemytskii(state);
    Eigen::VectorXd rhs = ops_->apply_mass(v);
    rhs.noalias() += gram_->g.transpose() * dw;
    return ops_->solve_shifted(k, rhs);
}

Eigen::VectorXd FemBackend::apply_shk(double k, const Eigen::VectorXd& state) {
    return ops_->solve_shifted(k, ops_->apply_mass(state));
}

Eigen::VectorXd FemBackend::inject_noise(double k, const Eigen::VectorXd& dw) {
    return ops_->solve_shifted(k, gram_->g.transpose() * dw);
}

Eigen::VectorXd FemBackend::drift_derivative_mult(const Eigen::VectorXd& x,
                                                  const Eigen::VectorXd& v) {
    if (drift_.zero) return Eigen::VectorXd::Zero(v.size());
    Eigen::VectorXd out(v.size());
    for (int i = 0; i < v.size(); ++i) out[i] = drift_.fprime(x[i]) * v[i];
    return out;
}

double FemBackend::h_norm(const Eigen::VectorXd& state) const {
    return ops_->mass_norm(state);
}

double FemBackend::diff_norm_sq_vs_spectral(const Eigen::VectorXd& ref,
                                            const Eigen::VectorXd& state) const {
    // ||ref||^2 - 2 <ref, state> + ||state||^2 with the cross term via the Gram
    const int n = std::min<int>(ref.size(), gram_->g.rows());
    const double cross = ref.head(n).dot(gram_->g.topRows(n) * state);
    return ref.squaredNorm() - 2.0 * cross + ops_->mass_inner(state, state);
}

double FemBackend::functional_inner(const Eigen::VectorXd& psi,
                                    const Eigen::VectorXd& state) const {
    const int n = std::min<int>(psi.size(), gram_->g.rows());
    return psi.head(n).dot(gram_->g.topRows(n) * state);
}

// ---------------------------------------------------------------------------
// path iteration

namespace {

Eigen::VectorXd increment_at(const NoiseModel& noise, std::uint64_t seed,
                             std::uint64_t sample, int n, double k,
                             const IncrementTable* table, int level_m) {
    if (table) return table->increment(level_m, n);
    Eigen::VectorXd dw(noise.modes);
    for (int j = 1; j <= noise.modes; ++j)
        dw[j - 1] = fine_increment(noise, seed, sample, n, j, k);
    return dw;
}

}  // namespace

Trajectory simulate_path(PathBackend& backend, const SchemeConfig& config,
                         const NoiseModel& noise, std::uint64_t seed,
                         std::uint64_t sample, const IncrementTable* table,
                         int level_m) {
    const double k = config.dt();
    Eigen::VectorXd state = backend.initial_state(config.x0);
    Trajectory traj;
    traj.backend = backend.tag();
    std::size_t next_cp = 0;
    for (int n = 0; n < config.steps; ++n) {
        const Eigen::VectorXd dw =
            increment_at(noise, seed, sample, n, k, table, level_m);
        state = backend.euler_step(k, state, dw);
        if (!state.allFinite())
            throw std::runtime_error("simulate_path: non-finite state at step " +
                                     std::to_string(n + 1));
        if (next_cp < config.checkpoints.size() &&
            config.checkpoints[next_cp] == n + 1) {
            traj.times.push_back((n + 1) * k);
            traj.states.push_back(state);
            ++next_cp;
        }
    }
    return traj;
}

PathRecord simulate_record(PathBackend& backend, const SchemeConfig& config,
                           const NoiseModel& noise, std::uint64_t seed,
                           std::uint64_t sample, const IncrementTable* table,
                           int level_m) {
    const double k = config.dt();
    PathRecord rec;
    rec.k = k;
    rec.states.reserve(config.steps + 1);
    Eigen::VectorXd state = backend.initial_state(config.x0);
    rec.states.push_back(state);
    for (int n = 0; n < config.steps; ++n) {
        const Eigen::VectorXd dw =
            increment_at(noise, seed, sample, n, k, table, level_m);
        state = backend.euler_step(k, state, dw);
        if (!state.allFinite())
            throw std::runtime_error("simulate_record: non-finite state at step " +
                                     std::to_string(n + 1));
        rec.states.push_back(state);
    }
    return rec;
}

Trajectory exact_linear_sample(const SpectralModel& model, const NoiseModel& noise,
                               const SchemeConfig& config, std::uint64_t seed,
                               std::uint64_t sample) {
    const double k = config.dt();
    const int J = model.modes;
    Eigen::VectorXd state = Eigen::VectorXd::Zero(J);
    state.head(std::min<int>(config.x0.size(), J)) =
        config.x0.head(std::min<int>(config.x0.size(), J));
    Trajectory traj;
    traj.backend = "exact";
    std::size_t next_cp = 0;
    for (int n = 0; n < config.steps; ++n) {
        for (int j = 1; j <= J; ++j) {
            const double lam = model.eigenvalues[j - 1];
            const double decay = std::exp(-lam * k);
            const double var =
                noise.weights[j - 1] * (1.0 - decay * decay) / (2.0 * lam);
            state[j - 1] = decay * state[j - 1] +
                           std::sqrt(var) * normal_draw(seed, sample, n, j);
        }
        if (next_cp < config.checkpoints.size() &&
            config.checkpoints[next_cp] == n + 1) {
            traj.times.push_back((n + 1) * k);
            traj.states.push_back(state);
            ++next_cp;
        }
    }
    return traj;
}

std::string trajectory_csv(const std::vector<std::pair<long, Trajectory>>& paths,
                           const std::vector<double>& functional_values,
                           bool include_coefficients) {
    std::ostringstream os;
    os.precision(17);
    os << "sample,t,backend,functional";
    if (include_coefficients) os << ",coefficients";
    os << '\n';
    std::size_t row = 0;
    for (const auto& [sample, traj] : paths) {
        for (std::size_t i = 0; i < traj.times.size(); ++i, ++row) {
            os << sample << ',' << traj.times[i] << ',' << traj.backend << ','
               << (row < functional_values.size() ? functional_values[row] : 0.0);
            if (include_coefficients) {
                os << ',';
                for (int j = 0; j < traj.states[i].size(); ++j)
                    os << (j ? ";" : "") << traj.states[i][j];
            }
            os << '\n';
        }
    }
    return os.str();
}

double spectral_shk_hs_norm_sq(const SpectralModel& model, const NoiseModel& noise,
                               double k, long n) {
    double sum = 0.0;
    const int J = std::min(model.modes, noise.modes);
    for (int j = J; j >= 1; --j)
        sum += noise.weights[j - 1] *
               std::pow(1.0 + k * model.eigenvalues[j - 1], -2.0 * n);
    return sum;
}

double spectral_shk_hs_geometric_sum(const SpectralModel& model,
                                     const NoiseModel& noise, double k, long N) {
    double sum = 0.0;
    const int J = std::min(model.modes, noise.modes);
    for (int j = J; j >= 1; --j) {
        const double lam = model.eigenvalues[j - 1];
        sum += noise.weights[j - 1] * (1.0 - std::pow(1.0 + k * lam, -2.0 * N)) /
               (lam * (2.0 + k * lam));
    }
    return sum;
}

SecondMoment second_moment_linear(const SpectralModel& model, const NoiseModel& noise,
                                  double T, long steps, const SpectralVector& x0) {
    const double k = T / steps;
    SecondMoment out;
    const int J = std::min(model.modes, noise.modes);
    for (int j = J; j >= 1; --j) {
        const double lam = model.eigenvalues[j - 1];
        out.exact += noise.weights[j - 1] * (1.0 - std::exp(-2.0 * lam * T)) /
                     (2.0 * lam);
    }
    for (int j = 0; j < x0.size() && j < model.modes; ++j) {
        const double lam = model.eigenvalues[j];
        out.exact += std::exp(-2.0 * lam * T) * x0[j] * x0[j];
        out.discrete += std::pow(1.0 + k * lam, -2.0 * steps) * x0[j] * x0[j];
    }
    out.discrete += spectral_shk_hs_geometric_sum(model, noise, k, steps);
    return out;
}

SecondMoment second_moment_linear_fem(const FemOperators& ops, const CrossGram& gram,
                                      const NoiseModel& noise, double T, int steps,
                                      const SpectralVector& x0) {
    const double k = T / steps;
    SecondMoment out;
    const int J = std::min<int>(noise.modes, gram.g.rows());
    for (int j = J; j >= 1; --j) {
        const double lam = std::pow(std::numbers::pi * j, 2.0);
        out.exact += noise.weights[j - 1] * (1.0 - std::exp(-2.0 * lam * T)) /
                     (2.0 * lam);
    }
    for (int j = 0; j < x0.size() && j < J; ++j) {
        const double lam = std::pow(std::numbers::pi * (j + 1), 2.0);
        out.exact += std::exp(-2.0 * lam * T) * x0[j] * x0[j];
    }
    // ||S_{h,k}^N P_h x0||^2 in eigen-coordinates
    Eigen::VectorXd s = Eigen::VectorXd::Zero(gram.g.rows());
    s.head(std::min<int>(x0.size(), s.size())) =
        x0.head(std::min<int>(x0.size(), s.size()));
    const Eigen::VectorXd a = ops.eigenvectors().transpose() * (gram.g.transpose() * s);
    const Eigen::ArrayXd damp = (1.0 + k * ops.eigenvalues().array()).pow(-steps);
    out.discrete = (a.array() * damp).matrix().squaredNorm();
    out.discrete += shk_hs_geometric_sum(ops, gram, noise, k, steps);
    return out;
}

}  // namespace spdelab
