#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "superdiff/csv.hpp"
#include "superdiff/stats.hpp"

namespace superdiff::lab {

// ============================================================
// Experiment harness: JSON configs in, deterministic CSV tables and a
// report.json out. Exit codes: 0 success, 2 tolerance-check failure,
// 1 error.
// ============================================================

/// Statistical conventions shared by every experiment, echoed into each
/// report.
const nlohmann::json& defaults();

struct SchemaError : std::runtime_error {
    std::string field;
    SchemaError(std::string field_, const std::string& message)
        : std::runtime_error("config error at '" + field_ + "': " + message),
          field(std::move(field_)) {}
};

/// Structural validation of an experiment config; throws SchemaError naming
/// the offending field.
void validate_config(const nlohmann::json& config);

struct CheckResult {
    std::string name;
    std::string anchor;  // which claim the check exercises
    double target = 0.0;
    double obtained = 0.0;
    bool pass = false;
    std::string detail;
};

struct Report {
    nlohmann::json experiment;  // config echo
    std::vector<Table> tables;
    std::vector<CheckResult> checks;
    std::vector<std::pair<std::string, double>> scalars;  // named headline numbers
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    bool all_checks_pass() const;
};

struct RunResult {
    Report report;
    int exit_code = 0;
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicas;
    std::optional<std::string> output_dir;
};

/// Runs one experiment config; writes report.json plus tables/*.csv into the
/// output directory when one is configured.
RunResult run_experiment(const nlohmann::json& config, const Overrides& overrides = {});
RunResult run_experiment_file(const std::string& config_path, const Overrides& overrides = {});

/// OLS fit of log(value) against t over [window_lo, window_hi].
GrowthEstimate growth_fit(const std::vector<std::pair<double, double>>& series, double window_lo,
                          double window_hi);

/// Runs the named catalog example's full check bundle with pinned seeds and
/// budgets.
RunResult reproduce(const std::string& example_name, const Overrides& overrides = {});

std::vector<std::string> list_examples();

/// Writes report.json and tables/*.csv under out_dir (no-op when empty).
void write_report_outputs(const Report& report, const std::string& out_dir);

}  // namespace superdiff::lab
