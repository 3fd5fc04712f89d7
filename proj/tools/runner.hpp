#pragma once

// Scenario runner behind the `lab` binary: config ingestion, the per-scenario
// pipelines, and the JSON / CSV report writers.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace lab {

inline constexpr int kSchemaVersion = 1;

inline constexpr int kExitPass = 0;
inline constexpr int kExitBoundFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerics = 3;

/// Raised for every config problem; maps to exit status 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CustomFunction {
    std::vector<std::vector<std::size_t>> table;
    std::optional<std::vector<std::vector<std::size_t>>> bob_table;
};

struct ScenarioConfig {
    std::string scenario;
    std::vector<std::string> fixtures;
    std::vector<double> deltas{0.0};
    /// "uniform", "random" (drawn from the seed), or explicit weights keyed "u,v".
    std::string distribution = "uniform";
    std::map<std::string, double> distribution_weights;
    double net_eps = 0.0;
    std::size_t max_strategies = 12;
    double slack = 1e-6;
    std::uint64_t seed = 0;
    std::filesystem::path out = "lab-out";
    bool parallel = false;
    std::size_t instances = 1000;
    std::vector<std::size_t> disj_n{4, 9};
    /// Extra functions; each becomes a fixture "reveal-<name>".
    std::map<std::string, CustomFunction> functions;
};

inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"theorem1",       "lemma1",         "theorem2",       "appendix",
                                                "strengthen-eq",  "strengthen-ip",  "disj-tightness", "qcore-selftest"};
    return names;
}

/// Parses and validates a config document.  `scenario` is the subcommand
/// argument; a "scenario" key in the document must agree with it.
ScenarioConfig parse_config(const nlohmann::json& doc, const std::string& scenario);
ScenarioConfig load_config(const std::filesystem::path& file, const std::string& scenario);

/// Checks ranges and scenario-required keys; throws ConfigError.
void validate(const ScenarioConfig& cfg);

struct SummaryRow {
    std::string fixture;
    double delta;
    std::optional<double> eps_corr, eps_sec, avg_success, threshold_6, min_success, threshold_28;
    std::optional<bool> lemma1_pass, theorem2_pass;
    bool pass;
};

struct BoundCheck {
    std::string fixture;
    double delta;
    std::string check;
    double measured;
    /// ">=", "<=", ">" or "<"; equalities appear as |deviation| <= tolerance
    std::string relation;
    double threshold;
    bool pass;
};

struct ScenarioResult {
    nlohmann::json report;
    std::vector<BoundCheck> checks;
    std::vector<SummaryRow> summary;
    bool pass() const;
};

/// Runs the pipeline.  Throws qlab::NumericsFault on a numerics fault and
/// ConfigError for problems only visible once fixtures are built.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

/// Column order of the bound-check CSV.
inline constexpr const char* kChecksHeader = "scenario,fixture,delta,check,measured,relation,threshold,pass";
/// Column order of the summary CSV.
inline constexpr const char* kSummaryHeader =
    "fixture,delta,eps_corr,eps_sec,avg_success,threshold_6eps,min_success,threshold_28eps,lemma1_pass,theorem2_pass,"
    "pass";

std::string checks_csv(const std::string& scenario, const std::vector<BoundCheck>& checks);
std::string summary_csv(const std::vector<SummaryRow>& rows);
std::string summary_table(const std::vector<SummaryRow>& rows);
/// Exact textual form used in CSV cells: shortest round-trip decimal.
std::string format_number(double x);

/// Writes <out>/<scenario>.json, <scenario>_checks.csv and <scenario>_summary.csv.
void write_reports(const ScenarioConfig& cfg, const ScenarioResult& result);

struct SelftestReport {
    std::size_t instances;
    std::size_t failures;
    std::map<std::string, double> worst_error;
    std::map<std::string, double> tolerance;
    std::vector<std::string> messages;
    bool pass() const { return failures == 0; }
};

/// Property checks on random states and channels of dimension ≤ 16:
/// fidelity identities, purification round trips, trace preservation and
/// Uhlmann optimality.
SelftestReport qcore_selftest(std::uint64_t seed, std::size_t instances);

/// Entry point shared by main(): returns the process exit status.
int run_cli(int argc, char** argv);

}  // namespace lab
