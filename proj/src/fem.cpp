#include "spdelab/fem.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace spdelab {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd tridiag_const_solve(double diag, double off, Eigen::VectorXd rhs) {
    const int n = static_cast<int>(rhs.size());
    Eigen::VectorXd cp(n);
    cp[0] = off / diag;
    rhs[0] /= diag;
    for (int i = 1; i < n; ++i) {
        const double m = diag - off * cp[i - 1];
        cp[i] = off / m;
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / m;
    }
    for (int i = n - 2; i >= 0; --i) rhs[i] -= cp[i] * rhs[i + 1];
    return rhs;
}

Eigen::VectorXd tridiag_apply(double diag, double off, const Eigen::VectorXd& c) {
    const int n = static_cast<int>(c.size());
    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) {
        double v = diag * c[i];
        if (i > 0) v += off * c[i - 1];
        if (i + 1 < n) v += off * c[i + 1];
        out[i] = v;
    }
    return out;
}

double fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const int n = static_cast<int>(xs.size());
    if (n < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double lx = std::log(xs[i]);
        const double ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Power iteration for the largest eigenvalue of a symmetric PSD operator
/// given by its matvec. Deterministic start vector.
double sym_largest_eig(int dim, const std::function<void(const Eigen::VectorXd&,
                                                         Eigen::VectorXd&)>& matvec) {
    Eigen::VectorXd v(dim), w(dim);
    for (int i = 0; i < dim; ++i) v[i] = 1.0 + 0.37 * std::sin(0.7 * (i + 1));
    v.normalize();
    double prev = 0.0;
    for (int it = 0; it < 4000; ++it) {
        matvec(v, w);
        const double rq = v.dot(w);
        const double nw = w.norm();
        if (nw == 0.0) return 0.0;
        v = w / nw;
        if (it > 4 && std::abs(rq - prev) <= 1e-13 * std::max(1.0, std::abs(rq)))
            return rq;
        prev = rq;
    }
    return prev;
}

}  // namespace

Mesh Mesh::uniform(int interior_nodes) {
    if (interior_nodes < 1) throw std::invalid_argument("mesh: M must be >= 1");
    Mesh m;
    m.interior_nodes = interior_nodes;
    m.spacing = 1.0 / (interior_nodes + 1);
    return m;
}

FemOperators FemOperators::assemble(int interior_nodes) {
    FemOperators ops;
    ops.mesh_ = Mesh::uniform(interior_nodes);
    const double h = ops.mesh_.spacing;
    ops.mass_diag_ = 4.0 * h / 6.0;
    ops.mass_off_ = h / 6.0;
    ops.stiff_diag_ = 2.0 / h;
    ops.stiff_off_ = -1.0 / h;
    return ops;
}

Eigen::VectorXd FemOperators::apply_mass(const Eigen::VectorXd& c) const {
    return tridiag_apply(mass_diag_, mass_off_, c);
}

Eigen::VectorXd FemOperators::apply_stiffness(const Eigen::VectorXd& c) const {
    return tridiag_apply(stiff_diag_, stiff_off_, c);
}

Eigen::VectorXd FemOperators::solve_mass(const Eigen::VectorXd& rhs) const {
    return tridiag_const_solve(mass_diag_, mass_off_, rhs);
}

Eigen::VectorXd FemOperators::solve_shifted(double k, const Eigen::VectorXd& rhs) const {
    return tridiag_const_solve(mass_diag_ + k * stiff_diag_, mass_off_ + k * stiff_off_,
                               rhs);
}

double FemOperators::mass_norm(const Eigen::VectorXd& c) const {
    return std::sqrt(std::max(0.0, mass_inner(c, c)));
}

double FemOperators::mass_inner(const Eigen::VectorXd& a,
                                const Eigen::VectorXd& b) const {
    return a.dot(apply_mass(b));
}

void FemOperators::ensure_eigen() const {
    if (mu_.size() > 0) return;
    const int m = dim();
    Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(m, m);
    Eigen::MatrixXd stiff = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        mass(i, i) = mass_diag_;
        stiff(i, i) = stiff_diag_;
        if (i + 1 < m) {
            mass(i, i + 1) = mass(i + 1, i) = mass_off_;
            stiff(i, i + 1) = stiff(i + 1, i) = stiff_off_;
        }
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(stiff, mass);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("fem: generalized eigen-decomposition failed");
    mu_ = es.eigenvalues();
    v_ = es.eigenvectors();  // mass-orthonormal columns
}

const Eigen::VectorXd& FemOperators::eigenvalues() const {
    ensure_eigen();
    return mu_;
}

const Eigen::MatrixXd& FemOperators::eigenvectors() const {
    ensure_eigen();
    return v_;
}

double FemOperators::eigenvalue_closed_form(int j) const {
    const double h = mesh_.spacing;
    const double c = std::cos(j * kPi * h);
    return 6.0 / (h * h) * (1.0 - c) / (2.0 + c);
}

Eigen::VectorXd FemOperators::ah_power(double rho, const Eigen::VectorXd& c) const {
    ensure_eigen();
    Eigen::VectorXd a = v_.transpose() * apply_mass(c);
    a.array() *= mu_.array().pow(rho);
    return v_ * a;
}

Eigen::VectorXd FemOperators::resolvent_power(double k, int n,
                                              const Eigen::VectorXd& c) const {
    ensure_eigen();
    Eigen::VectorXd a = v_.transpose() * apply_mass(c);
    a.array() *= (1.0 + k * mu_.array()).pow(-n);
    return v_ * a;
}

double CrossGram::entry_closed_form(int j, const Mesh& mesh, int i) {
    const double h = mesh.spacing;
    const double jp = j * kPi;
    return std::sqrt(2.0) * std::sin(jp * mesh.node(i)) * 2.0 *
           (1.0 - std::cos(jp * h)) / (jp * jp * h);
}

CrossGram CrossGram::build(const SpectralModel& model, const Mesh& mesh) {
    CrossGram gram;
    gram.g.resize(model.modes, mesh.interior_nodes);
    for (int j = 1; j <= model.modes; ++j)
        for (int i = 1; i <= mesh.interior_nodes; ++i)
            gram.g(j - 1, i - 1) = entry_closed_form(j, mesh, i);
    return gram;
}

Eigen::VectorXd project(const FemOperators& ops, const CrossGram& gram,
                        const SpectralVector& x) {
    if (gram.g.rows() != x.size())
        throw std::invalid_argument("project: gram built for a different mode count");
    return ops.solve_mass(gram.g.transpose() * x);
}

Eigen::VectorXd step_apply(const FemOperators& ops, double k,
                           const Eigen::VectorXd& c) {
    if (k <= 0.0) throw std::invalid_argument("step_apply: k must be > 0");
    return ops.solve_shifted(k, ops.apply_mass(c));
}

double opnorm_on_vh(const Eigen::MatrixXd& op, const FemOperators& ops) {
    const int m = ops.dim();
    Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        mass(i, i) = ops.mass_diag();
        if (i + 1 < m) mass(i, i + 1) = mass(i + 1, i) = ops.mass_off();
    }
    Eigen::MatrixXd quad = op.transpose() * mass * op;
    quad = 0.5 * (quad + quad.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(quad, mass);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("opnorm_on_vh: eigen-solver failed");
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double opnorm_from_spectral(const Eigen::MatrixXd& op, const FemOperators& ops) {
    const int m = ops.dim();
    Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        mass(i, i) = ops.mass_diag();
        if (i + 1 < m) mass(i, i + 1) = mass(i + 1, i) = ops.mass_off();
    }
    Eigen::MatrixXd quad = op.transpose() * mass * op;
    quad = 0.5 * (quad + quad.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(quad);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("opnorm_from_spectral: eigen-solver failed");
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

HsNorm hs_norm_q(const Eigen::MatrixXd& op_from_spectral, const FemOperators& ops,
                 const NoiseModel& noise) {
    const int J = std::min<int>(noise.modes, op_from_spectral.cols());
    double sum = 0.0;
    for (int j = J; j >= 1; --j) {
        const Eigen::VectorXd img = op_from_spectral.col(j - 1);
        sum += noise.weights[j - 1] * ops.mass_inner(img, img);
    }
    HsNorm out;
    out.value = std::sqrt(sum);
    const double opn = opnorm_from_spectral(op_from_spectral, ops);
    out.tail_estimate = noise.weights[J - 1] * opn * opn * J;
    out.truncation_warning = out.tail_estimate > 1e-6 * sum;
    return out;
}

double shk_hs_norm_sq(const FemOperators& ops, const CrossGram& gram,
                      const NoiseModel& noise, double k, int n) {
    const Eigen::MatrixXd c = ops.eigenvectors().transpose() * gram.g.transpose();
    const Eigen::ArrayXd damp = (1.0 + k * ops.eigenvalues().array()).pow(-2 * n);
    double sum = 0.0;
    const int J = std::min<int>(noise.modes, gram.g.rows());
    for (int j = 0; j < J; ++j)
        sum += noise.weights[j] * (c.col(j).array().square() * damp).sum();
    return sum;
}

double shk_hs_geometric_sum(const FemOperators& ops, const CrossGram& gram,
                            const NoiseModel& noise, double k, int N) {
    // k Sum_{m=1..N} r^m with r = (1+k mu)^{-2}:
    // k r (1-r^N)/(1-r) = (1-(1+k mu)^{-2N}) / (mu (2 + k mu))
    const Eigen::MatrixXd c = ops.eigenvectors().transpose() * gram.g.transpose();
    const Eigen::ArrayXd mu = ops.eigenvalues().array();
    const Eigen::ArrayXd geo =
        (1.0 - (1.0 + k * mu).pow(-2 * N)) / (mu * (2.0 + k * mu));
    double sum = 0.0;
    const int J = std::min<int>(noise.modes, gram.g.rows());
    for (int j = 0; j < J; ++j)
        sum += noise.weights[j] * (c.col(j).array().square() * geo).sum();
    return sum;
}

double compat_norm(const FemOperators& ops, const CrossGram& gram,
                   const SpectralModel& model, double rho) {
    // A_h^{-rho} P_h A^{rho} on the spectral span, in eigen-coordinates
    const Eigen::ArrayXd mu = ops.eigenvalues().array();
    Eigen::MatrixXd t = ops.eigenvectors().transpose() * gram.g.transpose();
    t.array().colwise() *= mu.pow(-rho);
    t.array().rowwise() *= model.eigenvalues.array().pow(rho).transpose();
    Eigen::MatrixXd quad = t * t.transpose();  // image coords are orthonormal
    quad = 0.5 * (quad + quad.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(quad);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double discrete_smoothing_norm(const FemOperators& ops, double rho, double k, int n) {
    if (k <= 0.0 || n < 1)
        throw std::invalid_argument("discrete_smoothing_norm: need k > 0, n >= 1");
    const Eigen::ArrayXd mu = ops.eigenvalues().array();
    return (mu.pow(rho) * (1.0 + k * mu).pow(-n)).maxCoeff();
}

double error_operator_norm(const FemOperators& ops, const CrossGram& gram,
                           const SpectralModel& model, double rho, double k, int n) {
    // E_{h,k}^n A^{rho/2} on the spectral span: quadratic form
    // N = D^2 - D (Gamma S C) - (Gamma S C)^T D + C^T S^2 C
    const int J = model.modes;
    const Eigen::ArrayXd lam = model.eigenvalues.array();
    const Eigen::ArrayXd d = lam.pow(0.5 * rho) * (-k * n * lam).exp();
    const Eigen::ArrayXd s =
        (1.0 + k * ops.eigenvalues().array()).pow(-n);  // eigen-space damping
    Eigen::MatrixXd c = ops.eigenvectors().transpose() * gram.g.transpose();
    c.array().rowwise() *= lam.pow(0.5 * rho).transpose();  // C = V^T G^T A^{rho/2}
    const Eigen::MatrixXd gamma = gram.g * ops.eigenvectors();

    Eigen::VectorXd cx(ops.dim()), gx(J), dx(J), cb(ops.dim());
    auto matvec = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
        cx.noalias() = c * x;
        gx.noalias() = gamma * (s * cx.array()).matrix();
        dx = (d * x.array()).matrix();
        cb.noalias() = c.transpose() * (s * (gamma.transpose() * dx).array()).matrix();
        y = (d * dx.array() - d * gx.array()).matrix() - cb +
            c.transpose() * (s.square() * cx.array()).matrix();
    };
    return std::sqrt(std::max(0.0, sym_largest_eig(J, matvec)));
}

double negnorm_operator_norm(const FemOperators& ops, const CrossGram& gram,
                             const SpectralModel& model, double gamma, double beta,
                             double t, double k) {
    if (t < 0.0) throw std::invalid_argument("negnorm_operator_norm: t must be >= 0");
    const int interval = static_cast<int>(std::floor(t / k));
    const int n = interval + 1;  // right-limit convention at grid points
    const int J = model.modes;
    const Eigen::ArrayXd lam = model.eigenvalues.array();
    const Eigen::ArrayXd da = lam.pow(-0.5 * gamma);
    const Eigen::ArrayXd dt = (-t * lam).exp() * lam.pow(0.5 * (1.0 - beta));
    const Eigen::ArrayXd s = (1.0 + k * ops.eigenvalues().array()).pow(-n);
    Eigen::MatrixXd c = ops.eigenvectors().transpose() * gram.g.transpose();
    c.array().rowwise() *= lam.pow(0.5 * (1.0 - beta)).transpose();
    const Eigen::MatrixXd gm = gram.g * ops.eigenvectors();

    Eigen::VectorXd r(J);
    auto matvec = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
        // R x = da * (dt x - Gamma S C x), then y = R^T (R x)
        r = (da * (dt * x.array() -
                   (gm * (s * (c * x).array()).matrix()).array()))
                .matrix();
        y = (dt * (da * r.array())).matrix() -
            c.transpose() * (s * (gm.transpose() * (da * r.array()).matrix()).array())
                                .matrix();
    };
    return std::sqrt(std::max(0.0, sym_largest_eig(J, matvec)));
}

namespace {

void finish_report(ProbeReport& rep, const std::vector<double>& hs,
                   const std::vector<double>& ks) {
    rep.max_ratio = 0.0;
    for (const auto& r : rep.rows) rep.max_ratio = std::max(rep.max_ratio, r.ratio);
    std::vector<double> per_h;
    for (double h : hs) {
        double m = 0.0;
        for (const auto& r : rep.rows)
            if (r.h == h) m = std::max(m, r.ratio);
        per_h.push_back(m);
    }
    std::vector<double> per_k;
    for (double k : ks) {
        double m = 0.0;
        for (const auto& r : rep.rows)
            if (r.k == k) m = std::max(m, r.ratio);
        per_k.push_back(m);
    }
    rep.growth_vs_h = -fit_loglog_slope(hs, per_h);
    rep.growth_vs_k = -fit_loglog_slope(ks, per_k);
}

std::vector<int> dyadic_steps(int n_max) {
    std::vector<int> ns;
    for (int n = 1; n < n_max; n *= 2) ns.push_back(n);
    ns.push_back(n_max);
    return ns;
}

}  // namespace

ProbeReport assumption_probe(double theta, double rho,
                             const std::vector<int>& mesh_sizes,
                             const std::vector<double>& steps, double T,
                             int spectral_factor) {
    if (theta < 0.0 || theta > 2.0)
        throw std::invalid_argument(
            "assumption_probe: Lemma 5.1 requires 0 <= theta <= 2");
    if (rho < -theta || rho > std::min(1.0, 2.0 - theta))
        throw std::invalid_argument(
            "assumption_probe: Lemma 5.1 requires -theta <= rho <= min(1, 2-theta)");
    ProbeReport rep;
    std::vector<double> hs, ks;
    for (int m : mesh_sizes) {
        FemOperators ops = FemOperators::assemble(m);
        const double h = ops.mesh().spacing;
        hs.push_back(h);
        SpectralModel model = SpectralModel::dirichlet(spectral_factor * m);
        CrossGram gram = CrossGram::build(model, ops.mesh());
        for (double k : steps) {
            if (hs.size() == 1) ks.push_back(k);
            const int n_max = std::max(1, static_cast<int>(std::llround(T / k)));
            for (int n : dyadic_steps(n_max)) {
                ProbeRow row;
                row.theta = theta;
                row.rho = rho;
                row.h = h;
                row.k = k;
                row.n = n;
                row.t_n = n * k;
                row.norm = error_operator_norm(ops, gram, model, rho, k, n);
                row.bound = (std::pow(h, theta) + std::pow(k, 0.5 * theta)) *
                            std::pow(row.t_n, -0.5 * (theta + rho));
                row.ratio = row.norm / row.bound;
                rep.rows.push_back(row);
            }
        }
    }
    if (ks.size() != steps.size()) ks = steps;
    finish_report(rep, hs, ks);
    return rep;
}

ProbeReport smoothing_probe_discrete(double rho, const std::vector<int>& mesh_sizes,
                                     const std::vector<double>& steps, double T) {
    if (rho < 0.0)
        throw std::invalid_argument("smoothing_probe_discrete: rho must be >= 0");
    ProbeReport rep;
    std::vector<double> hs;
    for (int m : mesh_sizes) {
        FemOperators ops = FemOperators::assemble(m);
        const double h = ops.mesh().spacing;
        hs.push_back(h);
        for (double k : steps) {
            const int n_max = std::max(1, static_cast<int>(std::llround(T / k)));
            for (int n : dyadic_steps(n_max)) {
                ProbeRow row;
                row.theta = std::nan("");
                row.rho = rho;
                row.h = h;
                row.k = k;
                row.n = n;
                row.t_n = n * k;
                row.norm = discrete_smoothing_norm(ops, rho, k, n);
                row.bound = std::pow(row.t_n, -rho);
                row.ratio = row.norm / row.bound;
                rep.rows.push_back(row);
            }
        }
    }
    finish_report(rep, hs, steps);
    return rep;
}

ProbeReport negnorm_probe(double gamma, double beta,
                          const std::vector<int>& mesh_sizes,
                          const std::vector<double>& steps,
                          const std::vector<double>& times, int spectral_factor) {
    if (!(gamma > 0.0 && gamma < beta))
        throw std::invalid_argument(
            "negnorm_probe: gamma must lie in (0, beta) (Assumption 2.1)");
    ProbeReport rep;
    std::vector<double> hs;
    for (int m : mesh_sizes) {
        FemOperators ops = FemOperators::assemble(m);
        const double h = ops.mesh().spacing;
        hs.push_back(h);
        SpectralModel model = SpectralModel::dirichlet(spectral_factor * m);
        CrossGram gram = CrossGram::build(model, ops.mesh());
        for (double k : steps) {
            for (double t : times) {
                ProbeRow row;
                row.theta = std::nan("");
                row.rho = gamma;
                row.h = h;
                row.k = k;
                row.n = static_cast<int>(std::floor(t / k));
                row.t_n = t;
                row.norm = negnorm_operator_norm(ops, gram, model, gamma, beta, t, k);
                row.bound = (std::pow(h, 2.0 * gamma) + std::pow(k, gamma)) *
                            std::pow(t, 0.5 * (-1.0 + beta - gamma));
                row.ratio = row.norm / row.bound;
                rep.rows.push_back(row);
            }
        }
    }
    finish_report(rep, hs, steps);
    return rep;
}

std::string probe_csv(const ProbeReport& report) {
    std::ostringstream os;
    os << "theta,rho,h,k,n,t_n,norm,bound,ratio\n";
    os.precision(17);
    for (const auto& r : report.rows) {
        os << r.theta << ',' << r.rho << ',' << r.h << ',' << r.k << ',' << r.n << ','
           << r.t_n << ',' << r.norm << ',' << r.bound << ',' << r.ratio << '\n';
    }
    return os.str();
}

}  // namespace spdelab
