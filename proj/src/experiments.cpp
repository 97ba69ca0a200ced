#include "spdelab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "spdelab/parallel.hpp"

namespace spdelab {

namespace {
constexpr double kPi = std::numbers::pi;
}

// ---------------------------------------------------------------------------
// regression utilities

RateFit fit_rate(const std::vector<std::pair<double, double>>& points,
                 const std::string& abscissa) {
    if (points.size() < 3)
        throw std::invalid_argument("fit_rate: need at least 3 points");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(points[i].first > 0.0) || !(points[i].second > 0.0))
            throw std::invalid_argument("fit_rate: non-positive value at row " +
                                        std::to_string(i));
    }
    const int n = static_cast<int>(points.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : points) {
        const double lx = std::log(x), ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    RateFit fit;
    fit.abscissa = abscissa;
    fit.points = n;
    const double denom = n * sxx - sx * sx;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    for (const auto& [x, y] : points) {
        const double r = std::log(y) - (fit.intercept + fit.slope * std::log(x));
        fit.residual_sum += r * r;
    }
    return fit;
}

double spearman_correlation(const std::vector<std::pair<double, double>>& points) {
    const int n = static_cast<int>(points.size());
    if (n < 2) return 0.0;
    auto ranks = [n](auto key) {
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), key);
        std::vector<double> r(n);
        for (int i = 0; i < n; ++i) r[idx[i]] = i;
        return r;
    };
    std::vector<double> rx =
        ranks([&](int a, int b) { return points[a].first < points[b].first; });
    std::vector<double> ry =
        ranks([&](int a, int b) { return points[a].second < points[b].second; });
    double d2 = 0.0;
    for (int i = 0; i < n; ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
    return 1.0 - 6.0 * d2 / (n * (static_cast<double>(n) * n - 1.0));
}

GronwallVerdict gronwall_check(const std::vector<double>& phi, double c1, double c2,
                               double mu, double nu, double k) {
    if (mu <= 0.0 || nu <= 0.0)
        throw std::invalid_argument("gronwall_check: mu, nu must be > 0");
    for (double v : phi)
        if (v < 0.0)
            throw std::invalid_argument("gronwall_check: sequence must be nonnegative");
    const int n_max = static_cast<int>(phi.size()) - 1;
    GronwallVerdict verdict;
    verdict.hypothesis_holds = true;
    double constant = 0.0;
    for (int n = 1; n <= n_max; ++n) {
        const double tn = n * k;
        double conv = 0.0;
        for (int j = 0; j < n; ++j)
            conv += std::pow((n - j) * k, -1.0 + nu) * phi[j];
        const double rhs = c1 * (1.0 + std::pow(tn, -1.0 + mu)) + c2 * k * conv;
        if (phi[n] > rhs * (1.0 + 1e-9)) {
            verdict.hypothesis_holds = false;
            if (verdict.first_violation < 0) verdict.first_violation = n;
        }
        if (c1 > 0.0)
            constant = std::max(constant,
                                phi[n] / (c1 * (1.0 + std::pow(tn, -1.0 + mu))));
    }
    verdict.constant = constant;
    return verdict;
}

// ---------------------------------------------------------------------------
// functionals

FunctionalSpec FunctionalSpec::linear(Eigen::VectorXd psi) {
    FunctionalSpec f;
    f.kind = Kind::linear;
    f.psi = std::move(psi);
    return f;
}
FunctionalSpec FunctionalSpec::squared_norm() {
    FunctionalSpec f;
    f.kind = Kind::squared_norm;
    return f;
}
FunctionalSpec FunctionalSpec::norm_power(int m) {
    FunctionalSpec f;
    f.kind = Kind::norm_power;
    f.half_power = m;
    return f;
}
FunctionalSpec FunctionalSpec::smoothed_exponential() {
    FunctionalSpec f;
    f.kind = Kind::smoothed_exponential;
    return f;
}

FunctionalSpec FunctionalSpec::by_name(const std::string& name, int modes) {
    if (name == "squared-norm" || name.empty()) return squared_norm();
    if (name == "linear") {
        Eigen::VectorXd psi = Eigen::VectorXd::Zero(modes);
        psi[0] = 1.0;
        if (modes > 2) psi[2] = 0.5;
        return linear(std::move(psi));
    }
    if (name == "norm-power-4") return norm_power(2);
    if (name == "smoothed-exponential") return smoothed_exponential();
    throw std::invalid_argument("unknown functional: " + name);
}

std::string FunctionalSpec::name() const {
    switch (kind) {
        case Kind::linear: return "linear";
        case Kind::squared_norm: return "squared-norm";
        case Kind::norm_power: return "norm-power-" + std::to_string(2 * half_power);
        case Kind::smoothed_exponential: return "smoothed-exponential";
    }
    return "?";
}

int FunctionalSpec::growth_degree() const {
    switch (kind) {
        case Kind::linear: return 2;  // Assumption 3.1 asks m >= 2
        case Kind::squared_norm: return 2;
        case Kind::norm_power: return 2 * half_power;
        case Kind::smoothed_exponential: return 2;
    }
    return 2;
}

double FunctionalSpec::eval(const PathBackend& backend,
                            const Eigen::VectorXd& state) const {
    switch (kind) {
        case Kind::linear: return backend.functional_inner(psi, state);
        case Kind::squared_norm: {
            const double n = backend.h_norm(state);
            return n * n;
        }
        case Kind::norm_power:
            return std::pow(backend.h_norm(state), 2.0 * half_power);
        case Kind::smoothed_exponential: {
            const double n = backend.h_norm(state);
            return std::exp(-n * n);
        }
    }
    return 0.0;
}

std::pair<double, double> FunctionalSpec::derivative_norms(double r) const {
    switch (kind) {
        case Kind::linear: return {psi.norm(), 0.0};
        case Kind::squared_norm: return {2.0 * r, 2.0};
        case Kind::norm_power: {
            const int p2 = 2 * half_power;
            return {p2 * std::pow(r, p2 - 1),
                    p2 * (p2 - 1) * std::pow(r, std::max(0, p2 - 2))};
        }
        case Kind::smoothed_exponential: {
            const double e = std::exp(-r * r);
            return {2.0 * r * e, (2.0 + 4.0 * r * r) * e};
        }
    }
    return {0.0, 0.0};
}

// ---------------------------------------------------------------------------
// helpers shared by the MC studies

namespace {

std::vector<int> dyadic_checkpoints(int steps) {
    if (steps % 8 == 0) return {steps / 8, steps / 4, steps / 2, steps};
    return {steps};
}

/// Checkpoints shared across refinement levels: dyadic fractions of T when
/// every tested level supports them, otherwise the final time only.
std::vector<int> shared_checkpoints(int ref_steps,
                                    const std::vector<int>& step_counts) {
    bool dyadic = ref_steps % 8 == 0;
    for (int n : step_counts) dyadic = dyadic && n % 8 == 0;
    if (dyadic)
        return {ref_steps / 8, ref_steps / 4, ref_steps / 2, ref_steps};
    return {ref_steps};
}

ErrorRow base_row(const std::string& experiment, const StudyProblem& prob) {
    ErrorRow row;
    row.experiment = experiment;
    row.alpha = prob.noise.alpha;
    row.beta = prob.noise.beta_max();
    return row;
}

void check_reference(const std::vector<int>& step_counts, int ref_steps) {
    for (int n : step_counts)
        if (ref_steps % n != 0)
            throw std::invalid_argument(
                "reference does not refine tested level N=" + std::to_string(n));
}

struct MaxRowPick {
    double value = 0.0;
    double se = 0.0;
};

/// value = sqrt(max over checkpoints of mean), SE by the delta method.
MaxRowPick pick_strong(const std::vector<std::vector<double>>& sq_by_cp) {
    MaxRowPick pick;
    double best = -1.0, best_se = 0.0;
    for (const auto& sq : sq_by_cp) {
        const MeanEstimate m = mean_with_se(sq);
        if (m.mean > best) {
            best = m.mean;
            best_se = m.std_error;
        }
    }
    if (best <= 0.0) return pick;
    pick.value = std::sqrt(best);
    pick.se = best_se / (2.0 * std::sqrt(best));
    return pick;
}

}  // namespace

std::vector<ErrorRow> strong_error_k_sweep(const StudyProblem& prob, int modes,
                                           const std::vector<int>& step_counts,
                                           const ReferenceSpec& ref, long samples,
                                           std::uint64_t seed, int workers) {
    check_reference(step_counts, ref.steps);
    const SpectralModel model = SpectralModel::dirichlet(modes);
    const double k_f = prob.T / ref.steps;
    const auto cps_ref = shared_checkpoints(ref.steps, step_counts);
    const int n_levels = static_cast<int>(step_counts.size());
    const int n_cp = static_cast<int>(cps_ref.size());

    // per (level, checkpoint, sample) squared H-distance
    std::vector<std::vector<std::vector<double>>> sq(
        n_levels, std::vector<std::vector<double>>(n_cp, std::vector<double>(samples)));

    parallel_for(samples, workers, [&](long s) {
        SpectralBackend backend(model, prob.drift);
        const IncrementTable table(prob.noise, seed, s, ref.steps, k_f);
        SchemeConfig ref_cfg = SchemeConfig::make(prob.T, ref.steps, prob.x0);
        ref_cfg.checkpoints = cps_ref;
        const Trajectory ref_traj =
            simulate_path(backend, ref_cfg, prob.noise, seed, s, &table, 1);
        for (int lv = 0; lv < n_levels; ++lv) {
            const int n_steps = step_counts[lv];
            const int m = ref.steps / n_steps;
            SchemeConfig cfg = SchemeConfig::make(prob.T, n_steps, prob.x0);
            cfg.checkpoints.clear();
            for (int cp : cps_ref) cfg.checkpoints.push_back(cp / m);
            const Trajectory traj =
                simulate_path(backend, cfg, prob.noise, seed, s, &table, m);
            for (int c = 0; c < n_cp; ++c)
                sq[lv][c][s] = backend.diff_norm_sq_vs_spectral(ref_traj.states[c],
                                                                traj.states[c]);
        }
    });

    std::vector<ErrorRow> rows;
    for (int lv = 0; lv < n_levels; ++lv) {
        ErrorRow row = base_row("converge-strong", prob);
        row.backend = "spectral";
        row.functional = "l2-distance";
        row.k = prob.T / step_counts[lv];
        row.steps = step_counts[lv];
        row.samples = samples;
        const MaxRowPick pick = pick_strong(sq[lv]);
        row.value = pick.value;
        row.std_error = pick.se;
        if (step_counts[lv] == ref.steps) row.flag = "self";
        rows.push_back(row);
    }
    return rows;
}

std::vector<ErrorRow> strong_error_h_sweep(const StudyProblem& prob,
                                           const std::vector<int>& mesh_sizes,
                                           int step_count, long samples,
                                           std::uint64_t seed, int workers) {
    const int modes = prob.noise.modes;
    const SpectralModel model = SpectralModel::dirichlet(modes);
    const double k = prob.T / step_count;
    const auto cps = dyadic_checkpoints(step_count);
    const int n_cp = static_cast<int>(cps.size());
    const int n_levels = static_cast<int>(mesh_sizes.size());

    // shared immutable operators per mesh
    std::vector<std::shared_ptr<const FemOperators>> ops;
    std::vector<std::shared_ptr<const CrossGram>> grams;
    for (int m : mesh_sizes) {
        auto op = std::make_shared<FemOperators>(FemOperators::assemble(m));
        grams.push_back(std::make_shared<CrossGram>(CrossGram::build(model, op->mesh())));
        op->eigenvalues();  // precompute before the parallel section
        ops.push_back(std::move(op));
    }

    std::vector<std::vector<std::vector<double>>> sq(
        n_levels, std::vector<std::vector<double>>(n_cp, std::vector<double>(samples)));

    parallel_for(samples, workers, [&](long s) {
        SpectralBackend ref_backend(model, prob.drift);
        const IncrementTable table(prob.noise, seed, s, step_count, k);
        SchemeConfig cfg = SchemeConfig::make(prob.T, step_count, prob.x0);
        cfg.checkpoints = cps;
        const Trajectory ref_traj =
            simulate_path(ref_backend, cfg, prob.noise, seed, s, &table, 1);
        for (int lv = 0; lv < n_levels; ++lv) {
            FemBackend fem(ops[lv], grams[lv], prob.drift);
            const Trajectory traj =
                simulate_path(fem, cfg, prob.noise, seed, s, &table, 1);
            for (int c = 0; c < n_cp; ++c)
                sq[lv][c][s] =
                    fem.diff_norm_sq_vs_spectral(ref_traj.states[c], traj.states[c]);
        }
    });

    std::vector<ErrorRow> rows;
    for (int lv = 0; lv < n_levels; ++lv) {
        ErrorRow row = base_row("converge-strong", prob);
        row.backend = "fem";
        row.functional = "l2-distance";
        row.h = 1.0 / (mesh_sizes[lv] + 1);
        row.k = k;
        row.steps = step_count;
        row.samples = samples;
        const MaxRowPick pick = pick_strong(sq[lv]);
        row.value = pick.value;
        row.std_error = pick.se;
        rows.push_back(row);
    }
    return rows;
}

Eigen::VectorXd exact_linear_reference(const SpectralModel& model,
                                       const NoiseModel& noise,
                                       const IncrementTable& table,
                                       int cp_fine_steps, const SpectralVector& x0,
                                       std::uint64_t seed, std::uint64_t sample,
                                       int cp_index) {
    const double k_f = table.k_fine();
    const double t_cp = cp_fine_steps * k_f;
    const int J = model.modes;
    Eigen::VectorXd out(J);
    for (int j = 1; j <= J; ++j) {
        const double lam = model.eigenvalues[j - 1];
        const double q = noise.weights[j - 1];
        double mean = j <= x0.size() ? std::exp(-lam * t_cp) * x0[j - 1] : 0.0;
        double weight_sq_sum = 0.0;
        for (int n = 0; n < cp_fine_steps; ++n) {
            // integral of e^{-lam (t_cp - s)} over the n-th fine interval
            const double integ = std::exp(-lam * (t_cp - (n + 1) * k_f)) *
                                 (-std::expm1(-lam * k_f)) / lam;
            const double w = integ / k_f;
            mean += w * table.fine()(j - 1, n);
            weight_sq_sum += integ * integ / k_f;
        }
        const double total_var = q * (1.0 - std::exp(-2.0 * lam * t_cp)) / (2.0 * lam);
        const double resid = std::max(0.0, total_var - q * weight_sq_sum);
        mean += std::sqrt(resid) *
                normal_draw(seed, sample, table.n_fine() + cp_index, j);
        out[j - 1] = mean;
    }
    return out;
}

std::vector<ErrorRow> weak_error_mc_k_sweep(const StudyProblem& prob,
                                            const FunctionalSpec& functional,
                                            int modes,
                                            const std::vector<int>& step_counts,
                                            const ReferenceSpec& ref, long samples,
                                            std::uint64_t seed, int workers) {
    check_reference(step_counts, ref.steps);
    const SpectralModel model = SpectralModel::dirichlet(modes);
    const double k_f = prob.T / ref.steps;
    const auto cps_ref = shared_checkpoints(ref.steps, step_counts);
    const int n_cp = static_cast<int>(cps_ref.size());
    const int n_levels = static_cast<int>(step_counts.size());
    const bool exact_ref = prob.drift.zero;

    std::vector<std::vector<std::vector<double>>> diff(
        n_levels, std::vector<std::vector<double>>(n_cp, std::vector<double>(samples)));

    parallel_for(samples, workers, [&](long s) {
        SpectralBackend backend(model, prob.drift);
        const IncrementTable table(prob.noise, seed, s, ref.steps, k_f);
        std::vector<double> ref_vals(n_cp);
        if (exact_ref) {
            for (int c = 0; c < n_cp; ++c) {
                const Eigen::VectorXd xr = exact_linear_reference(
                    model, prob.noise, table, cps_ref[c], prob.x0, seed, s, c);
                ref_vals[c] = functional.eval(backend, xr);
            }
        } else {
            SchemeConfig ref_cfg = SchemeConfig::make(prob.T, ref.steps, prob.x0);
            ref_cfg.checkpoints = cps_ref;
            const Trajectory rt =
                simulate_path(backend, ref_cfg, prob.noise, seed, s, &table, 1);
            for (int c = 0; c < n_cp; ++c)
                ref_vals[c] = functional.eval(backend, rt.states[c]);
        }
        for (int lv = 0; lv < n_levels; ++lv) {
            const int n_steps = step_counts[lv];
            const int m = ref.steps / n_steps;
            SchemeConfig cfg = SchemeConfig::make(prob.T, n_steps, prob.x0);
            cfg.checkpoints.clear();
            for (int cp : cps_ref) cfg.checkpoints.push_back(cp / m);
            const Trajectory traj =
                simulate_path(backend, cfg, prob.noise, seed, s, &table, m);
            for (int c = 0; c < n_cp; ++c)
                diff[lv][c][s] =
                    ref_vals[c] - functional.eval(backend, traj.states[c]);
        }
    });

    std::vector<ErrorRow> rows;
    for (int lv = 0; lv < n_levels; ++lv) {
        ErrorRow row = base_row("converge-weak", prob);
        row.backend = "spectral";
        row.functional = functional.name();
        row.k = prob.T / step_counts[lv];
        row.steps = step_counts[lv];
        row.samples = samples;
        double best = -1.0, best_se = 0.0;
        for (int c = 0; c < n_cp; ++c) {
            const MeanEstimate m = mean_with_se(diff[lv][c]);
            if (std::abs(m.mean) > best) {
                best = std::abs(m.mean);
                best_se = m.std_error;
            }
        }
        row.value = best;
        row.std_error = best_se;
        if (best_se > 0.3 * std::max(best, 1e-300)) row.flag = "inconclusive";
        rows.push_back(row);
    }
    return rows;
}

std::vector<ErrorRow> weak_error_exact_quadratic_k_sweep(
    const StudyProblem& prob, int modes, const std::vector<long>& step_counts) {
    const SpectralModel model = SpectralModel::dirichlet(modes);
    std::vector<ErrorRow> rows;
    for (long n : step_counts) {
        const SecondMoment sm =
            second_moment_linear(model, prob.noise, prob.T, n, prob.x0);
        ErrorRow row = base_row("converge-weak-exact", prob);
        row.backend = "spectral";
        row.functional = "squared-norm";
        row.k = prob.T / n;
        row.steps = n;
        row.value = std::abs(sm.exact - sm.discrete);
        rows.push_back(row);
    }
    return rows;
}

namespace {

/// Per-mesh scaffolding for the time-exact (semidiscrete) space-error sweeps.
/// The noise truncation is self-similar, J = 4/h, so the dropped tail scales
/// with the resolved one and the spatial rate is clean.
struct SemidiscreteLevel {
    FemOperators ops;
    SpectralModel model;
    NoiseModel noise;
    CrossGram gram;
    Eigen::MatrixXd c0;  // V^T G^T, eigen-coordinates of P_h e_l
    Eigen::MatrixXd gv;  // G V, spectral expansion of the eigenvectors

    explicit SemidiscreteLevel(int m, double alpha)
        : ops(FemOperators::assemble(m)),
          model(SpectralModel::dirichlet(4 * (m + 1))),
          noise(NoiseModel::power_decay(alpha, 4 * (m + 1))),
          gram(CrossGram::build(model, ops.mesh())) {
        c0 = ops.eigenvectors().transpose() * gram.g.transpose();
        gv = gram.g * ops.eigenvectors();
    }
};

}  // namespace

std::vector<ErrorRow> weak_error_exact_quadratic_h_sweep(
    const StudyProblem& prob, const std::vector<int>& mesh_sizes, int /*unused*/) {
    std::vector<ErrorRow> rows;
    for (int m : mesh_sizes) {
        const SemidiscreteLevel lvl(m, prob.noise.alpha);
        const double T = prob.T;
        double exact = 0.0;
        for (int l = 1; l <= lvl.model.modes; ++l) {
            const double lam = lvl.model.eigenvalues[l - 1];
            exact += lvl.noise.weights[l - 1] * (1.0 - std::exp(-2.0 * lam * T)) /
                     (2.0 * lam);
            if (l <= prob.x0.size())
                exact += std::exp(-2.0 * lam * T) * prob.x0[l - 1] * prob.x0[l - 1];
        }
        double semi = 0.0;
        const Eigen::ArrayXd mu = lvl.ops.eigenvalues().array();
        for (int i = 0; i < m; ++i) {
            double qi = 0.0;
            for (int l = 1; l <= lvl.model.modes; ++l)
                qi += lvl.noise.weights[l - 1] * lvl.c0(i, l - 1) * lvl.c0(i, l - 1);
            semi += qi * (1.0 - std::exp(-2.0 * mu[i] * T)) / (2.0 * mu[i]);
        }
        if (prob.x0.size() > 0 && prob.x0.norm() > 0.0) {
            Eigen::VectorXd x0pad = Eigen::VectorXd::Zero(lvl.model.modes);
            x0pad.head(std::min<int>(prob.x0.size(), lvl.model.modes)) =
                prob.x0.head(std::min<int>(prob.x0.size(), lvl.model.modes));
            const Eigen::VectorXd a0 = lvl.c0 * x0pad;
            semi += ((-T * mu).exp() * a0.array()).matrix().squaredNorm();
        }
        ErrorRow row = base_row("converge-weak-exact", prob);
        row.backend = "fem";
        row.functional = "squared-norm";
        row.h = lvl.ops.mesh().spacing;
        row.k = 0.0;  // time-exact comparison
        row.value = std::abs(exact - semi);
        rows.push_back(row);
    }
    return rows;
}

std::vector<ErrorRow> strong_error_exact_linear_h_sweep(
    const StudyProblem& prob, const std::vector<int>& mesh_sizes) {
    if (!prob.drift.zero)
        throw std::invalid_argument(
            "strong_error_exact_linear_h_sweep: drift must be zero");
    std::vector<ErrorRow> rows;
    for (int m : mesh_sizes) {
        const SemidiscreteLevel lvl(m, prob.noise.alpha);
        const double T = prob.T;
        const Eigen::ArrayXd mu = lvl.ops.eigenvalues().array();
        double ex = 0.0, cross = 0.0, fem = 0.0;
        for (int l = 1; l <= lvl.model.modes; ++l) {
            const double lam = lvl.model.eigenvalues[l - 1];
            const double q = lvl.noise.weights[l - 1];
            ex += q * (1.0 - std::exp(-2.0 * lam * T)) / (2.0 * lam);
            for (int i = 0; i < m; ++i) {
                cross += q * lvl.gv(l - 1, i) * lvl.c0(i, l - 1) *
                         (1.0 - std::exp(-(lam + mu[i]) * T)) / (lam + mu[i]);
            }
        }
        for (int i = 0; i < m; ++i) {
            double qi = 0.0;
            for (int l = 1; l <= lvl.model.modes; ++l)
                qi += lvl.noise.weights[l - 1] * lvl.c0(i, l - 1) * lvl.c0(i, l - 1);
            fem += qi * (1.0 - std::exp(-2.0 * mu[i] * T)) / (2.0 * mu[i]);
        }
        // deterministic initial-value part
        if (prob.x0.size() > 0 && prob.x0.norm() > 0.0) {
            Eigen::VectorXd x0pad = Eigen::VectorXd::Zero(lvl.model.modes);
            x0pad.head(std::min<int>(prob.x0.size(), lvl.model.modes)) =
                prob.x0.head(std::min<int>(prob.x0.size(), lvl.model.modes));
            const Eigen::VectorXd sx0 =
                ((-T * lvl.model.eigenvalues.array()).exp() * x0pad.array()).matrix();
            const Eigen::VectorXd a0 = lvl.c0 * x0pad;
            const Eigen::VectorXd afem = ((-T * mu).exp() * a0.array()).matrix();
            ex += sx0.squaredNorm();
            cross += sx0.dot(lvl.gv * afem);
            fem += afem.squaredNorm();
        }
        ErrorRow row = base_row("converge-strong", prob);
        row.backend = "fem";
        row.functional = "l2-distance";
        row.h = lvl.ops.mesh().spacing;
        row.k = 0.0;
        row.value = std::sqrt(std::max(0.0, ex - 2.0 * cross + fem));
        rows.push_back(row);
    }
    return rows;
}

std::vector<ErrorRow> negnorm_exact_k_sweep(double gamma, const StudyProblem& prob,
                                            int modes,
                                            const std::vector<int>& step_counts) {
    if (!(gamma > 0.0 && gamma < prob.noise.beta_max()))
        throw std::invalid_argument(
            "negnorm: gamma must be < beta (Assumption 2.1)");
    const SpectralModel model = SpectralModel::dirichlet(modes);
    std::vector<ErrorRow> rows;
    for (int n_steps : step_counts) {
        const double k = prob.T / n_steps;
        double total = 0.0;
        for (int j = 1; j <= std::min(modes, prob.noise.modes); ++j) {
            const double lam = model.eigenvalues[j - 1];
            const double w = prob.noise.weights[j - 1] * std::pow(lam, -gamma);
            const double a = 1.0 / (1.0 + k * lam);
            double mode_sum = 0.0;
            for (int i = 0; i < n_steps; ++i) {
                const double e0 = std::exp(-lam * i * k);
                const double e1 = std::exp(-lam * (i + 1) * k);
                const double an = std::pow(a, i + 1);
                mode_sum += (e0 * e0 - e1 * e1) / (2.0 * lam) -
                            2.0 * an * (e0 - e1) / lam + k * an * an;
            }
            total += w * mode_sum;
        }
        ErrorRow row = base_row("probe-negnorm", prob);
        row.experiment = "converge-negnorm";
        row.backend = "spectral";
        row.gamma = gamma;
        row.functional = "negnorm";
        row.k = k;
        row.steps = n_steps;
        row.value = std::sqrt(std::max(0.0, total));
        rows.push_back(row);
    }
    return rows;
}

std::vector<ErrorRow> negnorm_exact_h_sweep(double gamma, const StudyProblem& prob,
                                            const std::vector<int>& mesh_sizes,
                                            int /*unused*/) {
    if (!(gamma > 0.0 && gamma < prob.noise.beta_max()))
        throw std::invalid_argument(
            "negnorm: gamma must be < beta (Assumption 2.1)");
    std::vector<ErrorRow> rows;
    for (int m : mesh_sizes) {
        const SemidiscreteLevel lvl(m, prob.noise.alpha);
        const double T = prob.T;
        const int J = lvl.model.modes;
        const Eigen::ArrayXd lam = lvl.model.eigenvalues.array();
        const Eigen::ArrayXd mu = lvl.ops.eigenvalues().array();

        // int_0^T e^{-(a+b) t} dt
        auto kernel = [&](double a, double b) {
            return (1.0 - std::exp(-(a + b) * T)) / (a + b);
        };

        double total = 0.0;
        for (int l = 1; l <= J; ++l) {
            const double la = lam[l - 1];
            const double w = lvl.noise.weights[l - 1] * std::pow(la, -gamma);
            total += w * kernel(la, la);
            double s = 0.0;
            for (int i = 0; i < m; ++i)
                s += lvl.gv(l - 1, i) * lvl.c0(i, l - 1) * kernel(la, mu[i]);
            total -= 2.0 * w * s;
        }
        Eigen::MatrixXd kmat =
            lvl.gv.transpose() * lam.pow(-gamma).matrix().asDiagonal() * lvl.gv;
        Eigen::MatrixXd c0w = lvl.c0;
        for (int l = 0; l < J; ++l) c0w.col(l) *= lvl.noise.weights[l];
        const Eigen::MatrixXd rmat = c0w * lvl.c0.transpose();
        for (int i = 0; i < m; ++i)
            for (int i2 = 0; i2 < m; ++i2)
                total += kmat(i, i2) * rmat(i, i2) * kernel(mu[i], mu[i2]);

        ErrorRow row = base_row("converge-negnorm", prob);
        row.backend = "fem";
        row.gamma = gamma;
        row.functional = "negnorm";
        row.h = lvl.ops.mesh().spacing;
        row.k = 0.0;
        row.value = std::sqrt(std::max(0.0, total));
        rows.push_back(row);
    }
    return rows;
}

MarkovHolderResult markov_holder_exact(double gamma, const StudyProblem& prob,
                                       int modes, const std::vector<double>& deltas) {
    if (!(gamma >= 0.0 && gamma < prob.noise.beta_max()))
        throw std::invalid_argument(
            "markov_holder: gamma must be < beta (Assumption 2.1)");
    const SpectralModel model = SpectralModel::dirichlet(modes);
    auto second_moment_at = [&](double t) {
        double v = 0.0;
        for (int j = 1; j <= std::min(modes, prob.noise.modes); ++j) {
            const double lam = model.eigenvalues[j - 1];
            v += prob.noise.weights[j - 1] * (1.0 - std::exp(-2.0 * lam * t)) /
                 (2.0 * lam);
            if (j <= prob.x0.size())
                v += std::exp(-2.0 * lam * t) * prob.x0[j - 1] * prob.x0[j - 1];
        }
        return v;
    };
    MarkovHolderResult out;
    const double vT = second_moment_at(prob.T);
    std::vector<std::pair<double, double>> pts;
    for (double d : deltas) {
        ErrorRow row = base_row("markov-holder", prob);
        row.backend = "spectral";
        row.gamma = gamma;
        row.functional = "squared-norm";
        row.k = d;  // abscissa: the time offset
        row.value = std::abs(vT - second_moment_at(prob.T - d));
        out.rows.push_back(row);
        pts.emplace_back(d, row.value);
    }
    out.fit = fit_rate(pts, "dt");
    return out;
}

MarkovHolderResult markov_holder_mc(double gamma, const StudyProblem& prob,
                                    const FunctionalSpec& functional, int modes,
                                    int steps, const std::vector<int>& delta_steps,
                                    long samples, std::uint64_t seed, int workers) {
    if (!(gamma >= 0.0 && gamma < prob.noise.beta_max()))
        throw std::invalid_argument(
            "markov_holder: gamma must be < beta (Assumption 2.1)");
    const SpectralModel model = SpectralModel::dirichlet(modes);
    const double k = prob.T / steps;
    const int n_d = static_cast<int>(delta_steps.size());
    std::vector<std::vector<double>> diff(n_d, std::vector<double>(samples));

    parallel_for(samples, workers, [&](long s) {
        SpectralBackend backend(model, prob.drift);
        SchemeConfig cfg = SchemeConfig::make(prob.T, steps, prob.x0);
        cfg.checkpoints.clear();
        for (int d : delta_steps) cfg.checkpoints.push_back(steps - d);
        cfg.checkpoints.push_back(steps);
        std::sort(cfg.checkpoints.begin(), cfg.checkpoints.end());
        cfg.checkpoints.erase(
            std::unique(cfg.checkpoints.begin(), cfg.checkpoints.end()),
            cfg.checkpoints.end());
        const Trajectory traj = simulate_path(backend, cfg, prob.noise, seed, s);
        auto value_at = [&](int step) {
            for (std::size_t i = 0; i < cfg.checkpoints.size(); ++i)
                if (cfg.checkpoints[i] == step)
                    return functional.eval(backend, traj.states[i]);
            throw std::logic_error("markov_holder_mc: missing checkpoint");
        };
        const double vT = value_at(steps);
        for (int d = 0; d < n_d; ++d)
            diff[d][s] = vT - value_at(steps - delta_steps[d]);
    });

    MarkovHolderResult out;
    std::vector<std::pair<double, double>> pts;
    for (int d = 0; d < n_d; ++d) {
        const MeanEstimate m = mean_with_se(diff[d]);
        ErrorRow row = base_row("markov-holder", prob);
        row.backend = "spectral";
        row.gamma = gamma;
        row.functional = functional.name();
        row.k = delta_steps[d] * k;
        row.steps = steps;
        row.samples = samples;
        row.value = std::abs(m.mean);
        row.std_error = m.std_error;
        if (m.std_error > 0.3 * std::max(row.value, 1e-300)) {
            row.flag = "inconclusive";
            out.inconclusive = true;
        }
        out.rows.push_back(row);
        pts.emplace_back(row.k, std::max(row.value, 1e-300));
    }
    out.fit = fit_rate(pts, "dt");
    return out;
}

RateFit fit_from_rows(const std::vector<ErrorRow>& rows, const std::string& abscissa) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows) {
        if (r.flag == "self" || r.flag == "inconclusive") continue;
        const double x = abscissa == "h" ? r.h : r.k;
        if (x > 0.0 && r.value > 0.0) pts.emplace_back(x, r.value);
    }
    return fit_rate(pts, abscissa);
}

}  // namespace spdelab
