#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace spdelab {

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes of the CLI contract.
enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kNumericPrecondition = 3,
    kAssertFailure = 4,
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline const std::vector<std::string> kExperimentKinds = {
    "probe-operators", "probe-negnorm",      "converge-strong",
    "converge-weak",   "converge-weak-exact", "malliavin-norms",
    "ibp-test",        "dual-probe",          "markov-holder",
    "gronwall-demo"};

struct RunResult {
    int exit_code = 0;
    std::string message;
    std::string csv_path;
    std::string manifest_path;
};

/// Applies a --set block.key=value override onto the config document.
void apply_override(nlohmann::json& config, const std::string& spec);

/// Validates and runs one experiment; writes the CSV (with '#' manifest
/// header) and the JSON run manifest. `assert_checks` turns the experiment's
/// built-in expectations into a pass/fail gate (exit 4).
RunResult run_experiment(const nlohmann::json& config, bool assert_checks = false);

/// Merges result CSVs, recomputes fits, emits a plain-text summary and
/// (optionally) SVG log-log plots next to `svg_prefix`.
struct ReportResult {
    int exit_code = 0;
    std::string summary;
    std::vector<std::string> plot_files;
};
ReportResult report_csvs(const std::vector<std::string>& paths,
                         const std::string& svg_prefix = "");

}  // namespace spdelab
