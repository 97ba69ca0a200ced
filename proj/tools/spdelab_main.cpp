#include <CLI11.hpp>
#include <iostream>
#include <nlohmann/json.hpp>

#include "spdelab/csv.hpp"
#include "spdelab/runner.hpp"

using nlohmann::json;

int main(int argc, char** argv) {
    CLI::App app{"spdelab: stochastic heat equation discretization laboratory"};
    app.require_subcommand(0, 1);

    std::string config_path;
    std::vector<std::string> overrides;
    bool assert_checks = false;

    std::vector<CLI::App*> subs;
    for (const auto& kind : spdelab::kExperimentKinds) {
        CLI::App* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--set", overrides,
                        "override config values (block.key=value)");
        sub->add_flag("--assert", assert_checks,
                      "fail (exit 4) when built-in expectations do not hold");
        subs.push_back(sub);
    }

    CLI::App* rep = app.add_subcommand("report", "merge result CSVs and refit");
    std::vector<std::string> csv_paths;
    std::string svg_prefix;
    rep->add_option("csvs", csv_paths, "result CSV files");
    rep->add_option("--svg", svg_prefix, "write log-log SVG plots with this prefix");

    CLI11_PARSE(app, argc, argv);

    if (rep->parsed()) {
        const spdelab::ReportResult res =
            spdelab::report_csvs(csv_paths, svg_prefix);
        if (res.exit_code != 0) {
            std::cerr << res.summary << "\n";
            return res.exit_code;
        }
        std::cout << res.summary;
        for (const auto& f : res.plot_files) std::cout << "plot: " << f << "\n";
        return 0;
    }

    for (std::size_t i = 0; i < subs.size(); ++i) {
        if (!subs[i]->parsed()) continue;
        json config;
        if (!config_path.empty()) {
            try {
                config = json::parse(spdelab::read_file(config_path));
            } catch (const std::exception& e) {
                std::cerr << "config error: " << e.what() << "\n";
                return spdelab::kConfigError;
            }
        }
        config["experiment"] = spdelab::kExperimentKinds[i];
        try {
            for (const auto& o : overrides) spdelab::apply_override(config, o);
        } catch (const std::exception& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return spdelab::kConfigError;
        }
        const spdelab::RunResult res =
            spdelab::run_experiment(config, assert_checks);
        if (res.exit_code != 0) {
            std::cerr << "error (" << res.exit_code << "): " << res.message << "\n";
        } else {
            std::cout << "wrote " << res.csv_path << " and " << res.manifest_path
                      << "\n";
        }
        return res.exit_code;
    }

    std::cout << app.help();
    return 0;
}
