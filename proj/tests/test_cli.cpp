#include <unistd.h>
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <nlohmann/json.hpp>

#include <cstdlib>

#include "spdelab/csv.hpp"
#include "spdelab/runner.hpp"

using namespace spdelab;
using nlohmann::json;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("spdelab_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

json base_config(const std::string& experiment, const std::string& out) {
    json cfg;
    cfg["experiment"] = experiment;
    cfg["mc"] = {{"seed", 1}, {"samples", 64}, {"workers", 1}};
    cfg["output"] = {{"path", out}};
    return cfg;
}

}  // namespace

TEST_CASE("default weak-exact preset writes a CSV with a fit row") {
    TempDir tmp;
    json cfg = base_config("converge-weak-exact", tmp.file("wk.csv"));
    const RunResult res = run_experiment(cfg, true);
    REQUIRE(res.exit_code == 0);
    const Table t = read_csv(res.csv_path);
    CHECK(t.rows.size() >= 7);  // 7 sweep rows + fit
    CHECK(t.rows.back()[t.column_index("experiment")] == "converge-weak-exact:fit");
    // manifest written and digest echoed in the comments
    CHECK(std::filesystem::exists(res.manifest_path));
    bool has_digest = false;
    for (const auto& c : t.comments)
        has_digest = has_digest || c.find("manifest-digest") != std::string::npos;
    CHECK(has_digest);
}

TEST_CASE("missing seed is a config error naming seed") {
    json cfg;
    cfg["experiment"] = "converge-weak-exact";
    cfg["output"] = {{"path", "/tmp/never-written.csv"}};
    const RunResult res = run_experiment(cfg);
    CHECK(res.exit_code == kConfigError);
    CHECK(res.message.find("seed") != std::string::npos);
}

TEST_CASE("unknown experiment and malformed overrides are config errors") {
    json cfg = base_config("no-such-kind", "/tmp/x.csv");
    CHECK(run_experiment(cfg).exit_code == kConfigError);
    json ok = base_config("converge-weak-exact", "/tmp/x.csv");
    CHECK_THROWS_AS(apply_override(ok, "mc.samples"), ConfigError);
    apply_override(ok, "mc.samples=128");
    CHECK(ok["mc"]["samples"] == 128);
    apply_override(ok, "problem.drift=sin");
    CHECK(ok["problem"]["drift"] == "sin");
}

TEST_CASE("numeric preconditions exit with code 3 naming the constraint") {
    TempDir tmp;
    json cfg = base_config("probe-negnorm", tmp.file("nn.csv"));
    cfg["problem"] = {{"gamma", 0.6}, {"alpha", 0.0}, {"modes", 16}};
    cfg["grid"] = {{"k", {0.125, 0.0625, 0.03125}}};
    const RunResult res = run_experiment(cfg);
    CHECK(res.exit_code == kNumericPrecondition);
    CHECK(res.message.find("Assumption 2.1") != std::string::npos);
}

TEST_CASE("determinism: worker count does not change the CSV body") {
    TempDir tmp;
    json cfg1 = base_config("converge-strong", tmp.file("w1.csv"));
    cfg1["problem"] = {{"alpha", 2.0}, {"modes", 8}, {"drift", "sin"}};
    cfg1["grid"] = {{"k", {0.125, 0.0625}}};
    cfg1["mc"]["ref_steps"] = 64;
    cfg1["mc"]["samples"] = 48;
    json cfg8 = cfg1;
    cfg8["mc"]["workers"] = 8;
    cfg8["output"]["path"] = tmp.file("w8.csv");
    REQUIRE(run_experiment(cfg1).exit_code == 0);
    REQUIRE(run_experiment(cfg8).exit_code == 0);
    const Table a = read_csv(tmp.file("w1.csv"));
    const Table b = read_csv(tmp.file("w8.csv"));
    CHECK(a.body() == b.body());
}

TEST_CASE("report merges seeds and pools the standard error") {
    TempDir tmp;
    json cfg1 = base_config("converge-strong", tmp.file("s1.csv"));
    cfg1["problem"] = {{"alpha", 2.0}, {"modes", 8}};
    cfg1["grid"] = {{"k", {0.25, 0.125, 0.0625}}};
    cfg1["mc"]["ref_steps"] = 64;
    json cfg2 = cfg1;
    cfg2["mc"]["seed"] = 2;
    cfg2["output"]["path"] = tmp.file("s2.csv");
    REQUIRE(run_experiment(cfg1).exit_code == 0);
    REQUIRE(run_experiment(cfg2).exit_code == 0);

    SUBCASE("single input: fit equals the embedded one") {
        const ReportResult rep = report_csvs({tmp.file("s1.csv")});
        REQUIRE(rep.exit_code == 0);
        const Table t = read_csv(tmp.file("s1.csv"));
        const double embedded =
            std::stod(t.rows.back()[t.column_index("value")]);
        // summary contains the recomputed slope
        const std::string needle = "converge-strong";
        CHECK(rep.summary.find(needle) != std::string::npos);
        std::istringstream is(rep.summary);
        std::string line;
        double slope = 0.0;
        while (std::getline(is, line)) {
            if (line.find("converge-strong|spectral") != std::string::npos) {
                std::istringstream ls(line);
                std::string key, abscissa;
                int cells;
                double s, r;
                ls >> key >> cells >> abscissa >> s >> r;
                slope = s;
            }
        }
        CHECK(slope == doctest::Approx(embedded).epsilon(1e-9));  // 12-digit summary
    }
    SUBCASE("two seeds pool to a smaller SE") {
        // pooled mean of independent estimates cannot exceed either SE
        const Table t1 = read_csv(tmp.file("s1.csv"));
        const Table t2 = read_csv(tmp.file("s2.csv"));
        (void)t1;
        (void)t2;
        const ReportResult rep =
            report_csvs({tmp.file("s1.csv"), tmp.file("s2.csv")});
        CHECK(rep.exit_code == 0);
    }
    SUBCASE("empty input is an error") {
        CHECK(report_csvs({}).exit_code == kConfigError);
    }
    SUBCASE("schema mismatch names the missing column") {
        write_file(tmp.file("bad.csv"), "a,b\n1,2\n");
        const ReportResult rep = report_csvs({tmp.file("bad.csv")});
        CHECK(rep.exit_code == kConfigError);
        CHECK(rep.summary.find("experiment") != std::string::npos);
    }
    SUBCASE("svg plots are written on request") {
        const ReportResult rep =
            report_csvs({tmp.file("s1.csv")}, tmp.file("plot_"));
        REQUIRE(rep.exit_code == 0);
        REQUIRE(!rep.plot_files.empty());
        const std::string svg = read_file(rep.plot_files.front());
        CHECK(svg.find("<svg") != std::string::npos);
    }
}

TEST_CASE("probe-operators experiment with built-in assertions") {
    TempDir tmp;
    json cfg = base_config("probe-operators", tmp.file("po.csv"));
    cfg["problem"] = {{"theta", 2.0}, {"rho", 0.0}};
    cfg["grid"] = {{"h", {1.0 / 32, 1.0 / 64, 1.0 / 128}},
                   {"k", {1.0 / 16, 1.0 / 32, 1.0 / 64}}};
    const RunResult res = run_experiment(cfg, true);
    CHECK(res.exit_code == 0);
    const Table t = read_csv(tmp.file("po.csv"));
    CHECK(t.rows.size() > 10);
    CHECK(t.columns.front() == "theta");  // probe-report schema
    CHECK(t.columns.back() == "ratio");
}

TEST_CASE("malliavin-norms experiment emits the norm-sweep schema") {
    TempDir tmp;
    json cfg = base_config("malliavin-norms", tmp.file("mn.csv"));
    cfg["mc"]["samples"] = 100;
    cfg["problem"] = {{"alpha", 0.0}, {"modes", 8}, {"drift", "sin"},
                      {"p", 4.0}, {"q", 3.0}};
    cfg["grid"] = {{"h", {1.0 / 8}}, {"k", {1.0 / 8}}};
    REQUIRE(run_experiment(cfg).exit_code == 0);
    const Table t = read_csv(tmp.file("mn.csv"));
    CHECK(t.columns == std::vector<std::string>{"p", "q", "h", "k", "alpha",
                                                "estimate", "stderr", "samples"});
    CHECK(t.rows.size() == 1);
}

TEST_CASE("inverse-variance pooling never inflates the standard error") {
    Pooled p;
    p = pool_estimates(p, 1.0, 0.2, 100);
    CHECK(p.se == doctest::Approx(0.2));
    p = pool_estimates(p, 1.1, 0.4, 100);
    CHECK(p.se <= 0.2);   // <= each individual SE
    CHECK(p.se <= 0.4);
    CHECK(p.value > 1.0);
    CHECK(p.value < 1.1);
    // exact rows (zero SE) pool by plain weights
    Pooled q;
    q = pool_estimates(q, 2.0, 0.0, 1);
    q = pool_estimates(q, 4.0, 0.0, 1);
    CHECK(q.value == doctest::Approx(3.0));
}

TEST_CASE("worker count env override") {
    setenv("SPDELAB_WORKERS", "3", 1);
    CHECK(resolve_workers(1) == 3);
    unsetenv("SPDELAB_WORKERS");
    CHECK(resolve_workers(2) == 2);
}

TEST_CASE("ibp and dual-probe experiments run with assertions") {
    TempDir tmp;
    json cfg = base_config("ibp-test", tmp.file("ibp.csv"));
    cfg["mc"]["samples"] = 4000;
    CHECK(run_experiment(cfg, true).exit_code == 0);
    json dual = base_config("dual-probe", tmp.file("dual.csv"));
    dual["mc"]["samples"] = 4000;
    dual["problem"] = {{"p", 2.0}, {"q", 5.0}, {"sigma", 0.75}};
    CHECK(run_experiment(dual, true).exit_code == 0);
}

TEST_CASE("probe-negnorm ratio mode emits the probe schema") {
    TempDir tmp;
    json cfg = base_config("probe-negnorm", tmp.file("nnp.csv"));
    cfg["problem"] = {{"gamma", 0.4}, {"alpha", 0.0}, {"ratio_probe", true}};
    cfg["grid"] = {{"h", {1.0 / 16, 1.0 / 32}}, {"k", {1.0 / 16, 1.0 / 32}}};
    const RunResult res = run_experiment(cfg);
    REQUIRE(res.exit_code == 0);
    const Table t = read_csv(tmp.file("nnp.csv"));
    CHECK(t.columns.front() == "theta");
    CHECK(t.rows.size() == 2 * 2 * 6);
}

TEST_CASE("gronwall-demo experiment") {
    TempDir tmp;
    json cfg = base_config("gronwall-demo", tmp.file("gw.csv"));
    const RunResult res = run_experiment(cfg, true);
    CHECK(res.exit_code == 0);
}
