#include <CLI11.hpp>

#include <iostream>

#include "qlab/funcs.hpp"
#include "qlab/qcore.hpp"
#include "runner.hpp"

namespace lab {

namespace {

void write_diagnostic(const ScenarioConfig& cfg, const std::string& kind, const std::string& what) {
    const nlohmann::json doc = {{"schema_version", kSchemaVersion},
                                {"scenario", cfg.scenario},
                                {"seed", cfg.seed},
                                {"error", kind},
                                {"message", what}};
    try {
        std::filesystem::create_directories(cfg.out);
        std::ofstream(cfg.out / (cfg.scenario + "_diagnostic.json")) << doc.dump(2) << "\n";
    } catch (const std::exception&) {
        // the message below still reaches stderr
    }
    std::cerr << "lab: " << kind << ": " << what << "\n";
}

int execute(ScenarioConfig cfg, const std::optional<std::uint64_t>& seed, const std::optional<std::string>& out,
            bool parallel) {
    if (seed) cfg.seed = *seed;
    if (out) cfg.out = *out;
    if (parallel) cfg.parallel = true;
    try {
        validate(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "lab: invalid config: " << e.what() << "\n";
        return kExitConfig;
    }
    ScenarioResult result;
    try {
        result = run_scenario(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "lab: invalid config: " << e.what() << "\n";
        return kExitConfig;
    } catch (const qlab::NumericsFault& e) {
        write_diagnostic(cfg, "numerics fault", e.what());
        return kExitNumerics;
    } catch (const std::exception& e) {
        write_diagnostic(cfg, "internal error", e.what());
        return kExitNumerics;
    }
    write_reports(cfg, result);
    std::cout << summary_table(result.summary);
    std::size_t failed = 0;
    for (const auto& c : result.checks)
        if (!c.pass) {
            ++failed;
            std::cout << "FAILED " << c.fixture << " delta=" << format_number(c.delta) << " " << c.check << ": "
                      << format_number(c.measured) << " " << c.relation << " " << format_number(c.threshold) << "\n";
        }
    std::cout << result.checks.size() - failed << "/" << result.checks.size() << " bound checks pass; reports in "
              << cfg.out.string() << "\n";
    return result.pass() ? kExitPass : kExitBoundFailed;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Experiments on cheating strategies against secure two-party protocols"};
    app.require_subcommand(1);

    std::string scenario, config_file;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    bool parallel = false;
    auto* run = app.add_subcommand("run", "run a scenario and write its reports");
    run->add_option("scenario", scenario, "scenario name")->required()->check(CLI::IsMember(scenario_names()));
    run->add_option("--config", config_file, "JSON config file")->required();
    run->add_option("--seed", seed, "seed (overrides the config)");
    run->add_option("--out", out, "report directory (overrides the config)");
    run->add_flag("--parallel", parallel, "evaluate fixtures concurrently");

    auto* list = app.add_subcommand("list-fixtures", "print the fixture catalog");

    std::uint64_t selftest_seed = 0;
    std::size_t selftest_instances = 1000;
    auto* self = app.add_subcommand("selftest", "run the linear-algebra property suite");
    self->add_option("--seed", selftest_seed, "seed");
    self->add_option("--instances", selftest_instances, "number of random instances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitPass : kExitConfig;
    }

    if (*list) {
        for (const auto& e : qlab::fixture_catalog()) std::cout << e.id << "\t" << e.description << "\n";
        return kExitPass;
    }
    if (*self) {
        const auto rep = qcore_selftest(selftest_seed, selftest_instances);
        for (const auto& [name, worst] : rep.worst_error)
            std::cout << name << ": worst " << format_number(worst) << " (tolerance " << format_number(rep.tolerance.at(name))
                      << ")\n";
        for (const auto& m : rep.messages) std::cout << "FAILED " << m << "\n";
        std::cout << rep.instances << " instances, " << rep.failures << " failures\n";
        return rep.pass() ? kExitPass : kExitBoundFailed;
    }

    ScenarioConfig cfg;
    try {
        cfg = load_config(config_file, scenario);
    } catch (const ConfigError& e) {
        std::cerr << "lab: invalid config: " << e.what() << "\n";
        return kExitConfig;
    }
    return execute(std::move(cfg), seed, out, parallel);
}

}  // namespace lab
