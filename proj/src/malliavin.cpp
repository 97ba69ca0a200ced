#include "spdelab/malliavin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "spdelab/gauss_moments.hpp"
#include "spdelab/parallel.hpp"

namespace spdelab {

double gaussian_product_moment(const std::vector<Eigen::VectorXd>& forms) {
    const std::size_t m = forms.size();
    if (m == 0) return 1.0;
    if (m % 2 == 1) return 0.0;
    if (m == 2) return forms[0].dot(forms[1]);
    double sum = 0.0;
    for (std::size_t j = 1; j < m; ++j) {
        std::vector<Eigen::VectorXd> rest;
        rest.reserve(m - 2);
        for (std::size_t i = 1; i < m; ++i)
            if (i != j) rest.push_back(forms[i]);
        sum += forms[0].dot(forms[j]) * gaussian_product_moment(rest);
    }
    return sum;
}

// ---------------------------------------------------------------------------
// derivative propagation

DerivativeData propagate_derivative(PathBackend& backend, const PathRecord& path,
                                    const NoiseModel& noise, bool keep_columns) {
    const int N = static_cast<int>(path.states.size()) - 1;
    const int J = backend.noise_modes();
    const int dim = backend.dim();
    const double k = path.k;

    DerivativeData out;
    out.k = k;
    out.interval_hs_sq = Eigen::VectorXd::Zero(N);

    // column block layout: interval i occupies columns [i*J, (i+1)*J)
    Eigen::MatrixXd cols(dim, N * J);
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(J);
    for (int n = 0; n < N; ++n) {
        // existing columns: v <- S_{h,k}(I + k F'(X^n)) v
        if (n > 0) {
            Eigen::MatrixXd active = cols.leftCols(n * J);
            backend.derivative_step_batch(k, path.states[n], active);
            cols.leftCols(n * J) = active;
        }
        // new block for interval i = n: v_{n+1} = S_{h,k}(sqrt(q_l) e_l)
        for (int l = 1; l <= J; ++l) {
            unit.setZero();
            unit[l - 1] = std::sqrt(noise.weights[l - 1]);
            cols.col(n * J + (l - 1)) = backend.inject_noise(k, unit);
        }
    }
    for (int i = 0; i < N; ++i) {
        double s = 0.0;
        for (int l = 0; l < J; ++l) {
            const double nrm = backend.h_norm(cols.col(i * J + l));
            s += nrm * nrm;
        }
        out.interval_hs_sq[i] = s;
        if (keep_columns) out.columns.push_back(cols.middleCols(i * J, J));
    }
    return out;
}

std::vector<int> dyadic_interval_subset(int intervals) {
    std::vector<int> out;
    for (int gap = 1; gap < intervals; gap *= 2) out.push_back(intervals - gap);
    out.push_back(0);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

DerivativeData propagate_derivative_subset(PathBackend& backend,
                                           const PathRecord& path,
                                           const NoiseModel& noise,
                                           const std::vector<int>& intervals) {
    const int N = static_cast<int>(path.states.size()) - 1;
    const int J = backend.noise_modes();
    const int dim = backend.dim();
    const double k = path.k;

    DerivativeData out;
    out.k = k;
    out.interval_hs_sq = Eigen::VectorXd::Zero(N);

    Eigen::MatrixXd cols(dim, static_cast<int>(intervals.size()) * J);
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(J);
    int active_blocks = 0;
    for (int n = 0; n < N; ++n) {
        if (active_blocks > 0) {
            Eigen::MatrixXd active = cols.leftCols(active_blocks * J);
            backend.derivative_step_batch(k, path.states[n], active);
            cols.leftCols(active_blocks * J) = active;
        }
        if (active_blocks < static_cast<int>(intervals.size()) &&
            intervals[active_blocks] == n) {
            for (int l = 1; l <= J; ++l) {
                unit.setZero();
                unit[l - 1] = std::sqrt(noise.weights[l - 1]);
                cols.col(active_blocks * J + (l - 1)) = backend.inject_noise(k, unit);
            }
            ++active_blocks;
        }
    }
    for (int b = 0; b < active_blocks; ++b) {
        double s = 0.0;
        for (int l = 0; l < J; ++l) {
            const double nrm = backend.h_norm(cols.col(b * J + l));
            s += nrm * nrm;
        }
        out.interval_hs_sq[intervals[b]] = s;
    }
    return out;
}

Eigen::VectorXd subset_time_weights(int intervals, const std::vector<int>& subset) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(intervals);
    int prev = 0;
    for (int idx : subset) {
        w[idx] = idx - prev + 1;
        prev = idx + 1;
    }
    return w;
}

std::vector<Eigen::VectorXd> propagate_derivative_column(PathBackend& backend,
                                                         const PathRecord& path,
                                                         const NoiseModel& noise,
                                                         int interval, int mode) {
    const int N = static_cast<int>(path.states.size()) - 1;
    if (interval < 0 || interval >= N)
        throw std::out_of_range("propagate_derivative_column: interval out of range");
    const double k = path.k;
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(backend.noise_modes());
    unit[mode - 1] = std::sqrt(noise.weights[mode - 1]);

    std::vector<Eigen::VectorXd> seq;
    Eigen::VectorXd v = backend.inject_noise(k, unit);  // v_{i+1}
    seq.push_back(v);
    for (int n = interval + 1; n < N; ++n) {
        v += k * backend.drift_derivative_mult(path.states[n], v);
        v = backend.apply_shk(k, v);
        seq.push_back(v);
    }
    return seq;
}

// ---------------------------------------------------------------------------
// refined norms

RefinedNormEstimate refined_norm(double p, double q, double k,
                                 const std::vector<SampleFunctionalData>& ensemble) {
    if (q < 2.0) throw std::invalid_argument("refined_norm: q must be >= 2");
    if (p < 2.0) throw std::invalid_argument("refined_norm: p must be >= 2");
    if (ensemble.size() < 100)
        throw std::invalid_argument("refined_norm: need an ensemble of >= 100 samples");
    const long n = static_cast<long>(ensemble.size());
    std::vector<double> y(n);
    for (long s = 0; s < n; ++s) {
        const auto& d = ensemble[s];
        double dq;
        if (std::isinf(q)) {
            dq = d.interval_hs.size() ? d.interval_hs.maxCoeff() : 0.0;
        } else {
            dq = std::pow(k * d.interval_hs.array().pow(q).sum(), 1.0 / q);
        }
        y[s] = std::pow(d.state_norm, p) + std::pow(dq, p);
    }
    const double mean = pairwise_mean(y);
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    var /= std::max<long>(1, n - 1);
    const double se_mean = std::sqrt(var / n);

    RefinedNormEstimate est;
    est.p = p;
    est.q = q;
    est.samples = n;
    est.estimate = std::pow(mean, 1.0 / p);
    est.std_error = mean > 0.0
                        ? (1.0 / p) * std::pow(mean, 1.0 / p - 1.0) * se_mean
                        : 0.0;
    return est;
}

double deterministic_d_part(const std::vector<double>& shk_hs_norms, double k,
                            double q) {
    if (std::isinf(q)) {
        double m = 0.0;
        for (double v : shk_hs_norms) m = std::max(m, v);
        return m;
    }
    double s = 0.0;
    for (double v : shk_hs_norms) s += std::pow(v, q);
    return std::pow(k * s, 1.0 / q);
}

// ---------------------------------------------------------------------------
// cylindrical playground

namespace {

/// Flattened index of xi_{i,l} in R^{N*J}.
inline int flat(const WienerGrid& g, int i, int l) { return i * g.modes + l; }

/// Linear form of I(phi) = Sum_{i,l} sqrt(k) phi(l,i) xi_{i,l}.
Eigen::VectorXd ito_form(const WienerGrid& g, const Eigen::MatrixXd& phi) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(g.intervals * g.modes);
    const double sk = std::sqrt(g.k);
    for (int i = 0; i < g.intervals; ++i)
        for (int l = 0; l < g.modes; ++l) a[flat(g, i, l)] = sk * phi(l, i);
    return a;
}

/// Linear form of the projected increment <eta, Delta W_i>_{H0} / sqrt(k).
Eigen::VectorXd increment_form(const WienerGrid& g, const Eigen::VectorXd& eta,
                               int i) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(g.intervals * g.modes);
    for (int l = 0; l < g.modes; ++l) a[flat(g, i, l)] = eta[l];
    return a;
}

/// Linear form of I_{t_i}(phi): the integral up to t_i (adapted coefficient).
Eigen::VectorXd ito_form_until(const WienerGrid& g, const Eigen::MatrixXd& phi,
                               int i_end) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(g.intervals * g.modes);
    const double sk = std::sqrt(g.k);
    for (int i = 0; i < i_end; ++i)
        for (int l = 0; l < g.modes; ++l) a[flat(g, i, l)] = sk * phi(l, i);
    return a;
}

struct SampleDraw {
    Eigen::MatrixXd xi;  // modes x intervals
};

SampleDraw draw_sample(const WienerGrid& g, std::uint64_t seed, std::uint64_t sample) {
    SampleDraw d;
    d.xi.resize(g.modes, g.intervals);
    for (int i = 0; i < g.intervals; ++i)
        for (int l = 1; l <= g.modes; ++l)
            d.xi(l - 1, i) = normal_draw(seed, sample, i, l);
    return d;
}

double eval_form(const WienerGrid& g, const Eigen::VectorXd& form,
                 const Eigen::MatrixXd& xi) {
    double s = 0.0;
    for (int i = 0; i < g.intervals; ++i)
        for (int l = 0; l < g.modes; ++l) s += form[flat(g, i, l)] * xi(l, i);
    return s;
}

/// Per-interval coefficient c_i of Phi for one sample.
Eigen::VectorXd field_coef(const WienerGrid& g, const AdaptedField& phi,
                           const Eigen::MatrixXd& xi) {
    if (phi.kind == AdaptedField::Kind::linear_past) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(g.intervals);
        const double sk = std::sqrt(g.k);
        double acc = 0.0;
        for (int i = 0; i < g.intervals; ++i) {
            c[i] = acc;  // I_{t_i}: strictly the past
            for (int l = 0; l < g.modes; ++l) acc += sk * phi.phi3(l, i) * xi(l, i);
        }
        return c;
    }
    return phi.coef;
}

/// Scalar polynomial factor of Y and the coefficient of each phi_r in D Y.
struct YEval {
    double value = 0.0;                 // f(I(phi_1), ...)
    std::vector<double> d_coeff;        // multiplies phi_r(t) inside D_t Y
};

YEval eval_y(const WienerGrid& g, const CylindricalVariable& y,
             const Eigen::MatrixXd& xi) {
    YEval e;
    const double i1 = eval_form(g, ito_form(g, y.phi1), xi);
    switch (y.kind) {
        case CylindricalVariable::Kind::linear:
            e.value = i1;
            e.d_coeff = {1.0};
            break;
        case CylindricalVariable::Kind::product: {
            const double i2 = eval_form(g, ito_form(g, y.phi2), xi);
            e.value = i1 * i2;
            e.d_coeff = {i2, i1};
            break;
        }
        case CylindricalVariable::Kind::cube:
            e.value = i1 * i1 * i1;
            e.d_coeff = {3.0 * i1 * i1};
            break;
    }
    return e;
}

const Eigen::MatrixXd& y_phi(const CylindricalVariable& y, std::size_t r) {
    return r == 0 ? y.phi1 : y.phi2;
}

}  // namespace

AdaptedField AdaptedField::deterministic_field(const WienerGrid& grid,
                                               Eigen::VectorXd psi2,
                                               Eigen::VectorXd eta,
                                               Eigen::VectorXd coef) {
    AdaptedField f;
    f.kind = Kind::deterministic;
    f.label = "deterministic";
    f.psi2 = std::move(psi2);
    f.eta = std::move(eta);
    f.coef = std::move(coef);
    if (f.coef.size() != grid.intervals)
        throw std::invalid_argument("adapted field: coefficient length mismatch");
    return f;
}

AdaptedField AdaptedField::linear_past_field(const WienerGrid& grid,
                                             Eigen::VectorXd psi2,
                                             Eigen::VectorXd eta,
                                             Eigen::MatrixXd phi3) {
    AdaptedField f;
    f.kind = Kind::linear_past;
    f.label = "adapted-linear";
    f.psi2 = std::move(psi2);
    f.eta = std::move(eta);
    f.phi3 = std::move(phi3);
    if (f.phi3.rows() != grid.modes || f.phi3.cols() != grid.intervals)
        throw std::invalid_argument("adapted field: phi3 shape mismatch");
    return f;
}

AdaptedField AdaptedField::singular_field(const WienerGrid& grid,
                                          Eigen::VectorXd psi2, Eigen::VectorXd eta,
                                          double sigma) {
    AdaptedField f;
    f.kind = Kind::singular;
    f.label = "singular";
    f.psi2 = std::move(psi2);
    f.eta = std::move(eta);
    f.sigma = sigma;
    const double T = grid.horizon();
    f.coef.resize(grid.intervals);
    for (int i = 0; i < grid.intervals; ++i) {
        // interval average of (T-t)^-sigma over [t_i, t_{i+1})
        const double a = T - (i + 1) * grid.k;  // distance at the right end
        const double b = T - i * grid.k;
        f.coef[i] =
            (std::pow(b, 1.0 - sigma) - std::pow(a, 1.0 - sigma)) /
            ((1.0 - sigma) * grid.k);
    }
    return f;
}

IbpResult ibp_check(const WienerGrid& grid, const CylindricalVariable& y,
                    const AdaptedField& phi, long samples, std::uint64_t seed,
                    int workers) {
    if (y.kind == CylindricalVariable::Kind::product && y.phi2.size() == 0)
        throw std::invalid_argument("ibp_check: product variable needs phi2");
    const double psi_dot = y.psi.dot(phi.psi2);

    // projections of the Y fields onto the Phi direction, per interval
    std::vector<Eigen::VectorXd> proj(y.kind == CylindricalVariable::Kind::product ? 2
                                                                                   : 1);
    for (std::size_t r = 0; r < proj.size(); ++r) {
        proj[r].resize(grid.intervals);
        for (int i = 0; i < grid.intervals; ++i)
            proj[r][i] = y_phi(y, r).col(i).dot(phi.eta);
    }

    IbpResult out;
    out.samples = samples;

    // Monte Carlo, paired per sample
    std::vector<double> lhs_s(samples), rhs_s(samples);
    parallel_for(samples, workers, [&](long s) {
        const SampleDraw d = draw_sample(grid, seed, static_cast<std::uint64_t>(s));
        const YEval ye = eval_y(grid, y, d.xi);
        const Eigen::VectorXd c = field_coef(grid, phi, d.xi);
        double delta = 0.0;  // <delta Phi scalar part>
        const double sk = std::sqrt(grid.k);
        for (int i = 0; i < grid.intervals; ++i) {
            double xt = 0.0;
            for (int l = 0; l < grid.modes; ++l) xt += phi.eta[l] * d.xi(l, i);
            delta += c[i] * sk * xt;
        }
        lhs_s[s] = psi_dot * ye.value * delta;
        double rhs = 0.0;
        for (std::size_t r = 0; r < proj.size(); ++r)
            for (int i = 0; i < grid.intervals; ++i)
                rhs += grid.k * c[i] * ye.d_coeff[r] * proj[r][i];
        rhs_s[s] = psi_dot * rhs;
    });
    out.lhs = pairwise_mean(lhs_s);
    out.rhs = pairwise_mean(rhs_s);
    out.discrepancy = out.lhs - out.rhs;
    double var = 0.0;
    for (long s = 0; s < samples; ++s) {
        const double d = lhs_s[s] - rhs_s[s] - out.discrepancy;
        var += d * d;
    }
    var /= std::max<long>(1, samples - 1);
    out.pooled_se = std::sqrt(var / samples);

    // Isserlis oracle
    std::vector<Eigen::VectorXd> y_forms;
    y_forms.push_back(ito_form(grid, y.phi1));
    if (y.kind == CylindricalVariable::Kind::product)
        y_forms.push_back(ito_form(grid, y.phi2));
    if (y.kind == CylindricalVariable::Kind::cube) {
        y_forms.push_back(y_forms[0]);
        y_forms.push_back(y_forms[0]);
    }
    const double sk = std::sqrt(grid.k);
    double lhs_an = 0.0;
    for (int i = 0; i < grid.intervals; ++i) {
        std::vector<Eigen::VectorXd> forms = y_forms;
        if (phi.kind == AdaptedField::Kind::linear_past)
            forms.push_back(ito_form_until(grid, phi.phi3, i));
        forms.push_back(sk * increment_form(grid, phi.eta, i));
        double m = gaussian_product_moment(forms);
        if (phi.kind != AdaptedField::Kind::linear_past) m *= phi.coef[i];
        lhs_an += m;
    }
    out.lhs_analytic = psi_dot * lhs_an;

    double rhs_an = 0.0;
    for (int i = 0; i < grid.intervals; ++i) {
        for (std::size_t r = 0; r < proj.size(); ++r) {
            // expectation of d_coeff[r] * c_i
            std::vector<Eigen::VectorXd> forms;
            if (y.kind == CylindricalVariable::Kind::product)
                forms.push_back(ito_form(grid, y_phi(y, 1 - r)));
            if (y.kind == CylindricalVariable::Kind::cube) {
                forms.push_back(y_forms[0]);
                forms.push_back(y_forms[0]);
            }
            if (phi.kind == AdaptedField::Kind::linear_past)
                forms.push_back(ito_form_until(grid, phi.phi3, i));
            double m = gaussian_product_moment(forms);
            if (y.kind == CylindricalVariable::Kind::cube) m *= 3.0;
            if (phi.kind != AdaptedField::Kind::linear_past) m *= phi.coef[i];
            rhs_an += grid.k * m * proj[r][i];
        }
    }
    out.rhs_analytic = psi_dot * rhs_an;
    return out;
}

DualProbeReport dual_burkholder_probe(const WienerGrid& grid, double p, double q,
                                      const AdaptedField& phi,
                                      const std::vector<CylindricalVariable>& ys,
                                      long samples, std::uint64_t seed, int workers) {
    if (p < 2.0 || q < 2.0)
        throw std::invalid_argument("dual probe: p, q must be >= 2");
    const double pp = p / (p - 1.0);
    const double qp = std::isinf(q) ? 1.0 : q / (q - 1.0);
    const double eta_norm = phi.eta.norm();
    const double psi2_norm = phi.psi2.norm();

    DualProbeReport rep;
    rep.p = p;
    rep.q = q;

    // ||Phi||_{L^{p'}(Omega, L^{q'})} on the common samples
    std::vector<double> phin_s(samples);
    parallel_for(samples, workers, [&](long s) {
        const SampleDraw d = draw_sample(grid, seed, static_cast<std::uint64_t>(s));
        const Eigen::VectorXd c = field_coef(grid, phi, d.xi);
        double tq = 0.0;
        for (int i = 0; i < grid.intervals; ++i)
            tq += grid.k * std::pow(std::abs(c[i]) * psi2_norm * eta_norm, qp);
        phin_s[s] = std::pow(std::pow(tq, 1.0 / qp), pp);
    });
    const double phi_norm = std::pow(pairwise_mean(phin_s), 1.0 / pp);

    for (const auto& y : ys) {
        std::vector<double> lhs_s(samples), ynorm_s(samples);
        const double psi_dot = y.psi.dot(phi.psi2);
        const double psi_norm = y.psi.norm();
        const std::size_t nfields =
            y.kind == CylindricalVariable::Kind::product ? 2 : 1;
        parallel_for(samples, workers, [&](long s) {
            const SampleDraw d = draw_sample(grid, seed, static_cast<std::uint64_t>(s));
            const YEval ye = eval_y(grid, y, d.xi);
            const Eigen::VectorXd c = field_coef(grid, phi, d.xi);
            const double sk = std::sqrt(grid.k);
            double delta = 0.0;
            for (int i = 0; i < grid.intervals; ++i) {
                double xt = 0.0;
                for (int l = 0; l < grid.modes; ++l) xt += phi.eta[l] * d.xi(l, i);
                delta += c[i] * sk * xt;
            }
            lhs_s[s] = psi_dot * ye.value * delta;

            // ||Y||^p + ||DY||_{L^q}^p for this sample
            double dq = 0.0, dmax = 0.0;
            for (int i = 0; i < grid.intervals; ++i) {
                Eigen::VectorXd u = Eigen::VectorXd::Zero(grid.modes);
                for (std::size_t r = 0; r < nfields; ++r)
                    u += ye.d_coeff[r] * y_phi(y, r).col(i);
                const double hs = psi_norm * u.norm();
                dmax = std::max(dmax, hs);
                if (!std::isinf(q)) dq += grid.k * std::pow(hs, q);
            }
            const double dpart = std::isinf(q) ? dmax : std::pow(dq, 1.0 / q);
            ynorm_s[s] =
                std::pow(psi_norm * std::abs(ye.value), p) + std::pow(dpart, p);
        });
        DualProbeRow row;
        row.y_label = y.label;
        row.phi_label = phi.label;
        const double lhs_mean = pairwise_mean(lhs_s);
        double var = 0.0;
        for (long s = 0; s < samples; ++s)
            var += (lhs_s[s] - lhs_mean) * (lhs_s[s] - lhs_mean);
        var /= std::max<long>(1, samples - 1);
        row.lhs = std::abs(lhs_mean);
        row.lhs_se = std::sqrt(var / samples);
        row.phi_norm = phi_norm;
        const double ymean = pairwise_mean(ynorm_s);
        row.y_norm = std::pow(ymean, 1.0 / p);
        row.ratio = row.lhs / (row.phi_norm * row.y_norm);
        row.ratio_se = row.lhs_se / std::max(row.phi_norm * row.y_norm, 1e-300);
        // continuum-in-time L^2 of a (T-t)^-sigma profile diverges when 2 sigma >= 1
        row.l2_time_bound_finite =
            !(phi.kind == AdaptedField::Kind::singular && 2.0 * phi.sigma >= 1.0);
        rep.rows.push_back(row);
        rep.max_ratio = std::max(rep.max_ratio, row.ratio);
    }
    return rep;
}

CylindricalCatalog standard_catalog(int intervals, int modes, double T,
                                    double sigma) {
    CylindricalCatalog cat;
    cat.grid = WienerGrid{intervals, modes, T / intervals};
    const int dim_h = 4;

    Eigen::VectorXd psi(dim_h);
    psi << 1.0, 0.5, -0.25, 0.125;
    Eigen::VectorXd psi2(dim_h);
    psi2 << 0.8, -0.3, 0.4, 0.1;
    Eigen::VectorXd eta(modes);
    for (int l = 0; l < modes; ++l) eta[l] = 1.0 / (1.0 + l);
    eta.normalize();

    auto field = [&](double a, double b, double scale) {
        Eigen::MatrixXd phi(modes, intervals);
        for (int l = 0; l < modes; ++l)
            for (int i = 0; i < intervals; ++i)
                phi(l, i) = scale * std::sin(a * (l + 1) + b * (i + 1));
        return phi;
    };

    CylindricalVariable y1;
    y1.kind = CylindricalVariable::Kind::linear;
    y1.label = "psi*I(phi)";
    y1.psi = psi;
    y1.phi1 = field(0.9, 0.3, 1.0);
    cat.ys.push_back(y1);

    CylindricalVariable y2;
    y2.kind = CylindricalVariable::Kind::product;
    y2.label = "psi*I(phi1)I(phi2)";
    y2.psi = psi;
    y2.phi1 = field(0.9, 0.3, 1.0);
    y2.phi2 = field(0.4, 0.7, 0.8);
    cat.ys.push_back(y2);

    CylindricalVariable y3;
    y3.kind = CylindricalVariable::Kind::cube;
    y3.label = "psi*I(phi)^3";
    y3.psi = psi;
    y3.phi1 = field(1.3, 0.5, 0.7);
    cat.ys.push_back(y3);

    Eigen::VectorXd coef(intervals);
    for (int i = 0; i < intervals; ++i)
        coef[i] = 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * i / intervals);
    cat.phi_deterministic =
        AdaptedField::deterministic_field(cat.grid, psi2, eta, coef);
    cat.phi_adapted =
        AdaptedField::linear_past_field(cat.grid, psi2, eta, field(0.6, 1.1, 0.9));
    cat.phi_singular = AdaptedField::singular_field(cat.grid, psi2, eta, sigma);
    return cat;
}

}  // namespace spdelab
