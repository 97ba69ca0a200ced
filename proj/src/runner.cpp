#include "spdelab/runner.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spdelab/csv.hpp"
#include "spdelab/experiments.hpp"
#include "spdelab/fem.hpp"
#include "spdelab/malliavin.hpp"
#include "spdelab/parallel.hpp"

namespace spdelab {

using nlohmann::json;

namespace {

const std::vector<std::string> kResultColumns = {
    "experiment", "backend", "alpha", "beta", "gamma", "functional",
    "h",          "k",       "N",     "samples", "value", "stderr", "flag"};

struct ParsedConfig {
    std::string experiment;
    double T = 1.0;
    double alpha = 0.0;
    int modes = 256;
    std::string drift = "none";
    std::string x0 = "zero";
    std::string functional = "squared-norm";
    double gamma = 0.4;
    double p = 4.0, q = 3.0;
    double theta = 2.0, rho = 0.0;
    double sigma = 0.75;
    std::vector<double> hs, ks;
    long samples = 0;
    std::uint64_t seed = 0;
    int workers = 1;
    int ref_steps = 4096;
    std::string out_path;
    json echo;
};

double get_num(const json& block, const std::string& key, double fallback) {
    if (!block.contains(key)) return fallback;
    if (!block.at(key).is_number())
        throw ConfigError("config: '" + key + "' must be a number");
    return block.at(key).get<double>();
}

ParsedConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config: document must be an object");
    ParsedConfig c;
    if (!doc.contains("experiment") || !doc.at("experiment").is_string())
        throw ConfigError("config: missing 'experiment'");
    c.experiment = doc.at("experiment").get<std::string>();
    bool known = false;
    for (const auto& k : kExperimentKinds) known = known || k == c.experiment;
    if (!known) throw ConfigError("config: unknown experiment '" + c.experiment + "'");

    const json problem = doc.value("problem", json::object());
    c.T = get_num(problem, "T", 1.0);
    c.alpha = get_num(problem, "alpha", 0.0);
    c.modes = static_cast<int>(get_num(problem, "modes", 256));
    c.drift = problem.value("drift", "none");
    c.x0 = problem.value("x0", "zero");
    c.functional = problem.value("functional", "squared-norm");
    c.gamma = get_num(problem, "gamma", 0.4);
    c.p = get_num(problem, "p", 4.0);
    c.q = get_num(problem, "q", 3.0);
    c.theta = get_num(problem, "theta", 2.0);
    c.rho = get_num(problem, "rho", 0.0);
    c.sigma = get_num(problem, "sigma", 0.75);

    const json grid = doc.value("grid", json::object());
    if (grid.contains("h"))
        for (const auto& v : grid.at("h")) c.hs.push_back(v.get<double>());
    if (grid.contains("k"))
        for (const auto& v : grid.at("k")) c.ks.push_back(v.get<double>());

    const json mc = doc.value("mc", json::object());
    if (!mc.contains("seed"))
        throw ConfigError("config: missing mandatory 'seed' in mc block");
    c.seed = mc.at("seed").get<std::uint64_t>();
    c.samples = static_cast<long>(get_num(mc, "samples", 1000));
    c.workers = resolve_workers(static_cast<int>(get_num(mc, "workers", 1)));
    c.ref_steps = static_cast<int>(get_num(mc, "ref_steps", 4096));

    const json output = doc.value("output", json::object());
    c.out_path = output.value("path", c.experiment + ".csv");

    c.echo = doc;
    c.echo["mc"]["workers"] = c.workers;  // resolved value
    return c;
}

SpectralVector make_x0(const std::string& kind, int modes) {
    SpectralVector x0 = SpectralVector::Zero(modes);
    if (kind == "zero" || kind.empty()) return x0;
    if (kind == "mode1") {
        x0[0] = 1.0;
        return x0;
    }
    if (kind == "smooth") {
        for (int j = 1; j <= modes; ++j) x0[j - 1] = 1.0 / std::pow(j, 3);
        return x0;
    }
    throw ConfigError("config: unknown x0 '" + kind + "'");
}

StudyProblem make_problem(const ParsedConfig& c) {
    StudyProblem p;
    p.T = c.T;
    try {
        p.drift = DriftSpec::by_name(c.drift);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    p.noise = NoiseModel::power_decay(c.alpha, c.modes);
    p.x0 = make_x0(c.x0, c.modes);
    return p;
}

FunctionalSpec make_functional(const ParsedConfig& c) {
    try {
        return FunctionalSpec::by_name(c.functional, c.modes);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

std::vector<int> steps_from_ks(const ParsedConfig& c) {
    std::vector<int> ns;
    for (double k : c.ks) {
        const double n = c.T / k;
        const int ni = static_cast<int>(std::llround(n));
        if (ni < 1 || std::abs(n - ni) > 1e-9)
            throw ConfigError("config: k must divide T");
        ns.push_back(ni);
    }
    return ns;
}

std::vector<int> meshes_from_hs(const ParsedConfig& c) {
    std::vector<int> ms;
    for (double h : c.hs) {
        const double m = 1.0 / h - 1.0;
        const int mi = static_cast<int>(std::llround(m));
        if (mi < 1 || std::abs(m - mi) > 1e-9)
            throw ConfigError("config: h must equal 1/(M+1) for integer M");
        ms.push_back(mi);
    }
    return ms;
}

std::vector<std::string> row_to_csv(const ErrorRow& r) {
    return {r.experiment,
            r.backend,
            format_double(r.alpha),
            format_double(r.beta),
            format_double(r.gamma),
            r.functional,
            format_double(r.h),
            format_double(r.k),
            std::to_string(r.steps),
            std::to_string(r.samples),
            format_double(r.value),
            format_double(r.std_error),
            r.flag};
}

void append_fit_row(Table& table, const RateFit& fit, const ErrorRow& like) {
    ErrorRow row;
    row.experiment = like.experiment + ":fit";
    row.backend = "fit";
    row.alpha = like.alpha;
    row.beta = like.beta;
    row.gamma = like.gamma;
    row.functional = fit.abscissa;
    row.steps = fit.points;
    row.value = fit.slope;
    row.std_error = fit.residual_sum;
    table.add_row(row_to_csv(row));
}

bool doc_truthy(const json& doc, const std::string& block, const std::string& key) {
    if (!doc.contains(block)) return false;
    const json& b = doc.at(block);
    return b.contains(key) && b.at(key).is_boolean() && b.at(key).get<bool>();
}

struct AssertRecord {
    bool ok = true;
    std::string detail;
    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

void run_cylindrical_experiment(const std::string& kind, double p, double q,
                                double sigma, long samples, std::uint64_t seed,
                                int workers, Table& table, AssertRecord& checks) {
    const CylindricalCatalog cat = standard_catalog(16, 8, 1.0, sigma);
    if (kind == "ibp-test") {
        for (const auto& y : cat.ys) {
            for (const AdaptedField* phi :
                 {&cat.phi_deterministic, &cat.phi_adapted}) {
                const IbpResult res =
                    ibp_check(cat.grid, y, *phi, samples, seed, workers);
                ErrorRow row;
                row.experiment = "ibp-test";
                row.backend = "cylindrical";
                row.functional = y.label + "|" + phi->label;
                row.k = cat.grid.k;
                row.samples = res.samples;
                row.value = res.discrepancy;
                row.std_error = res.pooled_se;
                table.add_row(row_to_csv(row));
                checks.expect(std::abs(res.discrepancy) <=
                                  3.0 * res.pooled_se + 1e-12,
                              "ibp discrepancy beyond 3 SE for " + row.functional);
                checks.expect(std::abs(res.lhs_analytic - res.rhs_analytic) <=
                                  1e-12 * std::max(1.0, std::abs(res.lhs_analytic)),
                              "ibp analytic sides differ for " + row.functional);
            }
        }
        return;
    }
    for (const AdaptedField* phi :
         {&cat.phi_deterministic, &cat.phi_adapted, &cat.phi_singular}) {
        const DualProbeReport rep =
            dual_burkholder_probe(cat.grid, p, q, *phi, cat.ys, samples, seed,
                                  workers);
        for (const auto& r : rep.rows) {
            ErrorRow row;
            row.experiment = "dual-probe";
            row.backend = "cylindrical";
            row.gamma = sigma;
            row.functional = r.y_label + "|" + r.phi_label;
            row.k = cat.grid.k;
            row.samples = samples;
            row.value = r.ratio;
            row.std_error = r.ratio_se;
            row.flag = r.l2_time_bound_finite ? "" : "l2-bound-infinite";
            table.add_row(row_to_csv(row));
            checks.expect(r.ratio <= 1.0 + 3.0 * r.ratio_se,
                          "dual bound violated for " + row.functional);
        }
    }
}

}  // namespace

void apply_override(json& config, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
        throw ConfigError("--set expects block.key=value: " + spec);
    const std::string path = spec.substr(0, eq);
    const std::string value = spec.substr(eq + 1);
    const auto dot = path.find('.');
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::exception&) {
        parsed = value;  // bare strings allowed
    }
    if (dot == std::string::npos) {
        config[path] = parsed;
    } else {
        config[path.substr(0, dot)][path.substr(dot + 1)] = parsed;
    }
}

RunResult run_experiment(const json& config, bool assert_checks) {
    RunResult result;
    ParsedConfig c;
    try {
        c = parse_config(config);
    } catch (const ConfigError& e) {
        result.exit_code = kConfigError;
        result.message = e.what();
        return result;
    }

    const auto t0 = std::chrono::steady_clock::now();
    Table table;
    table.columns = kResultColumns;
    AssertRecord checks;

    try {
        const StudyProblem prob = make_problem(c);
        if (c.experiment == "converge-weak-exact") {
            if (c.ks.empty() && c.hs.empty())
                for (int e = 6; e <= 12; ++e) c.ks.push_back(std::pow(2.0, -e));
            std::vector<ErrorRow> rows;
            const bool k_is_sweep = c.ks.size() >= 3 || c.hs.empty();
            if (!c.ks.empty() && k_is_sweep) {
                {
                    const std::vector<int> si = steps_from_ks(c);
                    rows = weak_error_exact_quadratic_k_sweep(
                        prob, c.modes, std::vector<long>(si.begin(), si.end()));
                }
                for (const auto& r : rows) table.add_row(row_to_csv(r));
                if (rows.size() >= 3) {
                    const RateFit fit = fit_from_rows(rows, "k");
                    append_fit_row(table, fit, rows.front());
                    checks.expect(fit.slope > 0.2 && fit.slope < 1.2,
                                  "weak-exact k-slope out of range");
                }
            }
            if (!c.hs.empty()) {
                const int n = c.ks.empty() ? 4096 : steps_from_ks(c).back();
                auto hrows =
                    weak_error_exact_quadratic_h_sweep(prob, meshes_from_hs(c), n);
                for (const auto& r : hrows) table.add_row(row_to_csv(r));
                if (hrows.size() >= 3) {
                    const RateFit fit = fit_from_rows(hrows, "h");
                    append_fit_row(table, fit, hrows.front());
                    checks.expect(fit.slope > 0.4 && fit.slope < 2.2,
                                  "weak-exact h-slope out of range");
                }
            }
        } else if (c.experiment == "converge-strong") {
            if (c.samples < 2) throw ConfigError("config: samples must be >= 2");
            std::vector<ErrorRow> rows;
            if (!c.hs.empty()) {
                const int n = c.ks.empty() ? 256 : steps_from_ks(c).front();
                rows = strong_error_h_sweep(prob, meshes_from_hs(c), n, c.samples,
                                            c.seed, c.workers);
                for (const auto& r : rows) table.add_row(row_to_csv(r));
                if (rows.size() >= 3)
                    append_fit_row(table, fit_from_rows(rows, "h"), rows.front());
            } else {
                ReferenceSpec ref;
                ref.steps = c.ref_steps;
                rows = strong_error_k_sweep(prob, c.modes, steps_from_ks(c), ref,
                                            c.samples, c.seed, c.workers);
                for (const auto& r : rows) table.add_row(row_to_csv(r));
                if (rows.size() >= 4 ||
                    (rows.size() >= 3 && rows.back().flag != "self"))
                    append_fit_row(table, fit_from_rows(rows, "k"), rows.front());
            }
        } else if (c.experiment == "converge-weak") {
            const FunctionalSpec functional = make_functional(c);
            ReferenceSpec ref;
            ref.steps = c.ref_steps;
            auto rows = weak_error_mc_k_sweep(prob, functional, c.modes,
                                              steps_from_ks(c), ref, c.samples,
                                              c.seed, c.workers);
            for (const auto& r : rows) table.add_row(row_to_csv(r));
            if (rows.size() >= 3)
                append_fit_row(table, fit_from_rows(rows, "k"), rows.front());
        } else if (c.experiment == "probe-negnorm" &&
                   doc_truthy(c.echo, "problem", "ratio_probe")) {
            // operator-norm ratio probe for the negative-norm estimate
            std::vector<int> meshes = meshes_from_hs(c);
            if (meshes.empty() || c.ks.empty())
                throw ConfigError("config: grid must name h and k values");
            const double beta = std::min(1.0, admissible_beta(c.alpha));
            std::vector<double> times;
            for (int j = 5; j >= 0; --j) times.push_back(c.T * std::pow(2.0, -j));
            const auto rep =
                negnorm_probe(c.gamma, beta, meshes, c.ks, times);
            table.columns = {"theta", "rho", "h",    "k",     "n",
                             "t_n",   "norm", "bound", "ratio"};
            for (const auto& r : rep.rows)
                table.add_row({format_double(r.theta), format_double(r.rho),
                               format_double(r.h), format_double(r.k),
                               std::to_string(r.n), format_double(r.t_n),
                               format_double(r.norm), format_double(r.bound),
                               format_double(r.ratio)});
            table.comments.push_back(
                "max-ratio: " + format_double(rep.max_ratio) +
                " growth-vs-h: " + format_double(rep.growth_vs_h) +
                " growth-vs-k: " + format_double(rep.growth_vs_k));
            checks.expect(rep.growth_vs_h <= 0.05,
                          "negnorm ratio grows under mesh refinement");
        } else if (c.experiment == "probe-negnorm") {
            const bool k_is_sweep = c.ks.size() >= 3 || c.hs.empty();
            if (!c.ks.empty() && k_is_sweep) {
                auto kr = negnorm_exact_k_sweep(c.gamma, prob, c.modes,
                                                steps_from_ks(c));
                for (const auto& r : kr) table.add_row(row_to_csv(r));
                if (kr.size() >= 3)
                    append_fit_row(table, fit_from_rows(kr, "k"), kr.front());
            }
            if (!c.hs.empty()) {
                const int n = c.ks.empty() ? (1 << 10) : steps_from_ks(c).back();
                auto hr = negnorm_exact_h_sweep(c.gamma, prob, meshes_from_hs(c), n);
                for (const auto& r : hr) table.add_row(row_to_csv(r));
                if (hr.size() >= 3)
                    append_fit_row(table, fit_from_rows(hr, "h"), hr.front());
            }
        } else if (c.experiment == "probe-operators") {
            // ratio sweep for the one-step error estimate; probe-report schema
            std::vector<int> meshes = meshes_from_hs(c);
            if (meshes.empty()) throw ConfigError("config: grid must name h values");
            if (c.ks.empty()) throw ConfigError("config: grid must name k values");
            const auto rep = assumption_probe(c.theta, c.rho, meshes, c.ks, c.T);
            table.columns = {"theta", "rho", "h",    "k",     "n",
                             "t_n",   "norm", "bound", "ratio"};
            for (const auto& r : rep.rows)
                table.add_row({format_double(r.theta), format_double(r.rho),
                               format_double(r.h), format_double(r.k),
                               std::to_string(r.n), format_double(r.t_n),
                               format_double(r.norm), format_double(r.bound),
                               format_double(r.ratio)});
            table.comments.push_back(
                "max-ratio: " + format_double(rep.max_ratio) +
                " growth-vs-h: " + format_double(rep.growth_vs_h) +
                " growth-vs-k: " + format_double(rep.growth_vs_k));
            checks.expect(std::abs(rep.growth_vs_h) <= 0.05,
                          "assumption ratio trend vs h out of range");
            checks.expect(std::abs(rep.growth_vs_k) <= 0.05,
                          "assumption ratio trend vs k out of range");
        } else if (c.experiment == "markov-holder") {
            MarkovHolderResult res;
            if (prob.drift.zero && c.functional == "squared-norm") {
                std::vector<double> deltas;
                for (int j = 2; j <= 6; ++j) deltas.push_back(c.T * std::pow(2.0, -j));
                res = markov_holder_exact(c.gamma, prob, c.modes, deltas);
            } else {
                const FunctionalSpec functional = make_functional(c);
                const int steps = 256;
                res = markov_holder_mc(c.gamma, prob, functional, c.modes, steps,
                                       {4, 8, 16, 32, 64}, c.samples, c.seed,
                                       c.workers);
            }
            for (const auto& r : res.rows) table.add_row(row_to_csv(r));
            append_fit_row(table, res.fit, res.rows.front());
            checks.expect(res.fit.slope >= c.gamma - 0.1,
                          "markov-holder exponent below gamma - 0.1");
        } else if (c.experiment == "malliavin-norms") {
            // boundedness sweep over the (h, k) grid
            const std::vector<int> meshes = meshes_from_hs(c);
            const std::vector<int> ns = steps_from_ks(c);
            if (meshes.empty() || ns.empty())
                throw ConfigError("config: grid must name h and k values");
            if (c.samples < 100)
                throw ConfigError("config: malliavin-norms needs >= 100 samples");
            Table& t = table;
            t.columns = {"p", "q", "h", "k", "alpha", "estimate", "stderr",
                         "samples"};
            for (int m : meshes) {
                auto ops = std::make_shared<FemOperators>(FemOperators::assemble(m));
                ops->eigenvalues();
                const SpectralModel model = SpectralModel::dirichlet(c.modes);
                auto gram = std::make_shared<CrossGram>(
                    CrossGram::build(model, ops->mesh()));
                for (int n : ns) {
                    std::vector<SampleFunctionalData> ensemble(c.samples);
                    const double k = c.T / n;
                    const bool subsample = n > 128;
                    const std::vector<int> subset =
                        subsample ? dyadic_interval_subset(n) : std::vector<int>{};
                    if (subsample)
                        table.comments.push_back(
                            "interval-subsample: dyadic (" +
                            std::to_string(subset.size()) + " of " +
                            std::to_string(n) + ") at k=" + format_double(k));
                    const Eigen::VectorXd weights =
                        subsample ? subset_time_weights(n, subset)
                                  : Eigen::VectorXd::Ones(n);
                    parallel_for(c.samples, c.workers, [&](long s) {
                        FemBackend backend(ops, gram, prob.drift);
                        SchemeConfig cfg = SchemeConfig::make(c.T, n, prob.x0);
                        const PathRecord rec =
                            simulate_record(backend, cfg, prob.noise, c.seed, s);
                        const DerivativeData dd =
                            subsample ? propagate_derivative_subset(backend, rec,
                                                                    prob.noise, subset)
                                      : propagate_derivative(backend, rec, prob.noise);
                        ensemble[s].state_norm = backend.h_norm(rec.states.back());
                        // gap weights enter the L^q time sum linearly:
                        // k Sum w_i ||D^i||^q = k Sum (||D^i|| w_i^{1/q})^q
                        const double we = std::isinf(c.q) ? 0.0 : 1.0 / c.q;
                        ensemble[s].interval_hs =
                            (dd.interval_hs_sq.array().sqrt() *
                             weights.array().pow(we))
                                .matrix();
                    });
                    const RefinedNormEstimate est =
                        refined_norm(c.p, c.q, k, ensemble);
                    t.add_row({format_double(c.p), format_double(c.q),
                               format_double(1.0 / (m + 1)), format_double(k),
                               format_double(prob.noise.alpha),
                               format_double(est.estimate),
                               format_double(est.std_error),
                               std::to_string(est.samples)});
                }
            }
        } else if (c.experiment == "ibp-test" || c.experiment == "dual-probe") {
            run_cylindrical_experiment(c.experiment, c.p, c.q, c.sigma, c.samples,
                                       c.seed, c.workers, table, checks);
        } else if (c.experiment == "gronwall-demo") {
            // synthetic sequence generated by iterating the recursion with equality
            const int n_steps = 64;
            const double k = c.T / n_steps;
            const double c1 = 1.0, c2 = 0.5, mu = 0.5, nu = 0.5;
            std::vector<double> phi(n_steps + 1, 0.0);
            for (int n = 1; n <= n_steps; ++n) {
                double conv = 0.0;
                for (int j = 0; j < n; ++j)
                    conv += std::pow((n - j) * k, -1.0 + nu) * phi[j];
                phi[n] = c1 * (1.0 + std::pow(n * k, -1.0 + mu)) + c2 * k * conv;
            }
            const GronwallVerdict verdict = gronwall_check(phi, c1, c2, mu, nu, k);
            ErrorRow row;
            row.experiment = "gronwall-demo";
            row.backend = "exact";
            row.functional = verdict.hypothesis_holds ? "holds" : "violated";
            row.steps = n_steps;
            row.value = verdict.constant;
            table.add_row(row_to_csv(row));
            checks.expect(verdict.hypothesis_holds, "gronwall hypothesis violated");
        }
    } catch (const ConfigError& e) {
        result.exit_code = kConfigError;
        result.message = e.what();
        return result;
    } catch (const std::invalid_argument& e) {
        result.exit_code = kNumericPrecondition;
        result.message = e.what();
        return result;
    }

    const auto t1 = std::chrono::steady_clock::now();
    const double wall =
        std::chrono::duration_cast<std::chrono::duration<double>>(t1 - t0).count();

    json manifest;
    manifest["config"] = c.echo;
    manifest["version"] = kVersion;
    manifest["seed"] = c.seed;
    manifest["wall_time_s"] = wall;
    const std::string config_dump = c.echo.dump();
    std::ostringstream digest;
    digest << std::hex << fnv1a_digest(config_dump);
    manifest["digest"] = digest.str();

    table.comments.push_back("spdelab " + std::string(kVersion));
    table.comments.push_back("manifest-digest: " + digest.str());
    table.comments.push_back("config: " + config_dump);

    write_file(c.out_path, table.to_string());
    result.csv_path = c.out_path;
    result.manifest_path = c.out_path + ".manifest.json";
    write_file(result.manifest_path, manifest.dump(2) + "\n");

    if (assert_checks && !checks.ok) {
        result.exit_code = kAssertFailure;
        result.message = checks.detail;
        return result;
    }
    result.message = "ok";
    return result;
}

namespace {

struct PooledRow {
    double h = 0, k = 0;
    Pooled pooled;
};

std::string svg_loglog(const std::string& title,
                       const std::vector<std::pair<double, double>>& pts,
                       const RateFit& fit) {
    const int W = 480, H = 360, margin = 50;
    double lx0 = 1e300, lx1 = -1e300, ly0 = 1e300, ly1 = -1e300;
    for (const auto& [x, y] : pts) {
        lx0 = std::min(lx0, std::log10(x));
        lx1 = std::max(lx1, std::log10(x));
        ly0 = std::min(ly0, std::log10(y));
        ly1 = std::max(ly1, std::log10(y));
    }
    if (lx1 - lx0 < 1e-12) lx1 = lx0 + 1.0;
    if (ly1 - ly0 < 1e-12) ly1 = ly0 + 1.0;
    auto px = [&](double lx) {
        return margin + (lx - lx0) / (lx1 - lx0) * (W - 2 * margin);
    };
    auto py = [&](double ly) {
        return H - margin - (ly - ly0) / (ly1 - ly0) * (H - 2 * margin);
    };
    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
       << "'>\n<rect width='100%' height='100%' fill='white'/>\n"
       << "<text x='" << W / 2 << "' y='20' text-anchor='middle' font-size='13'>"
       << title << " (slope " << fit.slope << ")</text>\n"
       << "<line x1='" << margin << "' y1='" << H - margin << "' x2='" << W - margin
       << "' y2='" << H - margin << "' stroke='black'/>\n"
       << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin
       << "' y2='" << H - margin << "' stroke='black'/>\n";
    const double f0 = fit.intercept + fit.slope * std::log(std::pow(10.0, lx0));
    const double f1 = fit.intercept + fit.slope * std::log(std::pow(10.0, lx1));
    os << "<line x1='" << px(lx0) << "' y1='" << py(f0 / std::log(10.0)) << "' x2='"
       << px(lx1) << "' y2='" << py(f1 / std::log(10.0))
       << "' stroke='steelblue' stroke-dasharray='4 3'/>\n";
    for (const auto& [x, y] : pts)
        os << "<circle cx='" << px(std::log10(x)) << "' cy='" << py(std::log10(y))
           << "' r='3.5' fill='crimson'/>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace

ReportResult report_csvs(const std::vector<std::string>& paths,
                         const std::string& svg_prefix) {
    ReportResult out;
    if (paths.empty()) {
        out.exit_code = kConfigError;
        out.summary = "report: no input files";
        return out;
    }
    // group key -> pooled rows; key = experiment|backend|functional + abscissa cell
    std::map<std::string, std::map<std::string, PooledRow>> groups;
    try {
        for (const auto& path : paths) {
            const Table t = read_csv(path);
            for (const auto& col : kResultColumns)
                t.column_index(col);  // schema check, names the missing column
            const auto ci = [&](const char* name) { return t.column_index(name); };
            for (const auto& row : t.rows) {
                const std::string exp = row[ci("experiment")];
                if (exp.size() > 4 && exp.substr(exp.size() - 4) == ":fit") continue;
                const std::string key = exp + "|" + row[ci("backend")] + "|" +
                                        row[ci("functional")];
                const std::string cell =
                    row[ci("h")] + "|" + row[ci("k")] + "|" + row[ci("N")];
                PooledRow& p = groups[key][cell];
                const double value = std::stod(row[ci("value")]);
                const double se = std::stod(row[ci("stderr")]);
                const long n = std::stol(row[ci("samples")]);
                p.h = std::stod(row[ci("h")]);
                p.k = std::stod(row[ci("k")]);
                p.pooled = pool_estimates(p.pooled, value, se,
                                          static_cast<double>(std::max<long>(n, 1)));
            }
        }
    } catch (const std::exception& e) {
        out.exit_code = kConfigError;
        out.summary = std::string("report: ") + e.what();
        return out;
    }

    std::ostringstream os;
    os.precision(12);
    os << "experiment                         cells  abscissa  slope     residual\n";
    for (const auto& [key, cells] : groups) {
        std::vector<std::pair<double, double>> hpts, kpts;
        for (const auto& [cell, p] : cells) {
            if (p.pooled.value <= 0.0) continue;
            if (p.h > 0.0) hpts.emplace_back(p.h, p.pooled.value);
            if (p.k > 0.0) kpts.emplace_back(p.k, p.pooled.value);
        }
        auto distinct = [](const std::vector<std::pair<double, double>>& pts) {
            std::vector<double> xs;
            for (auto& [x, y] : pts) xs.push_back(x);
            std::sort(xs.begin(), xs.end());
            xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
            return xs.size();
        };
        const bool use_h = distinct(hpts) >= 3 && distinct(hpts) >= distinct(kpts);
        const auto& pts = use_h ? hpts : kpts;
        if (distinct(pts) < 3) {
            os << key << "  " << cells.size() << "  (no fit)\n";
            continue;
        }
        const RateFit fit = fit_rate(pts, use_h ? "h" : "k");
        os << key << "  " << cells.size() << "  " << fit.abscissa << "  "
           << fit.slope << "  " << fit.residual_sum << "\n";
        if (!svg_prefix.empty()) {
            std::string fname = key;
            for (char& c : fname)
                if (c == '|' || c == '*' || c == '/' || c == '(' || c == ')')
                    c = '_';
            const std::string path = svg_prefix + fname + ".svg";
            write_file(path, svg_loglog(key, pts, fit));
            out.plot_files.push_back(path);
        }
    }
    out.summary = os.str();
    return out;
}

}  // namespace spdelab
