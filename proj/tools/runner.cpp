#include "runner.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "qlab/attack.hpp"
#include "qlab/funcs.hpp"
#include "qlab/game.hpp"

namespace lab {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config parsing

const std::set<std::string> kKnownKeys{"scenario", "fixtures",  "deltas",    "distribution", "net_eps",
                                       "max_strategies", "slack", "seed", "out", "parallel",
                                       "instances", "disj_n", "functions"};

bool needs_fixtures(const std::string& s) {
    return s == "theorem1" || s == "lemma1" || s == "theorem2" || s == "strengthen-eq" || s == "strengthen-ip";
}

std::vector<std::string> default_fixtures(const std::string& s) {
    if (s == "appendix") return {"appendix-n1"};
    if (s == "disj-tightness") return {"disj-perturbed-n2"};
    return {};
}

template <class T>
T get_as(const json& doc, const std::string& key) {
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

double get_real(const json& doc, const std::string& key) {
    if (!doc.at(key).is_number()) throw ConfigError("config key '" + key + "' must be a number");
    return doc.at(key).get<double>();
}

bool is_count(const json& x) { return x.is_number_unsigned() || (x.is_number_integer() && x.get<long long>() >= 0); }

std::size_t get_count(const json& doc, const std::string& key) {
    if (!is_count(doc.at(key))) throw ConfigError("config key '" + key + "' must be a non-negative integer");
    return doc.at(key).get<std::size_t>();
}

std::vector<std::vector<std::size_t>> get_table(const json& t, const std::string& where) {
    if (!t.is_array() || t.empty()) throw ConfigError(where + " must be a non-empty array of rows");
    std::vector<std::vector<std::size_t>> out;
    for (const auto& row : t) {
        if (!row.is_array() || row.empty()) throw ConfigError(where + " rows must be non-empty arrays");
        std::vector<std::size_t> r;
        for (const auto& x : row) {
            if (!is_count(x)) throw ConfigError(where + " entries must be non-negative integers");
            r.push_back(x.get<std::size_t>());
        }
        if (!out.empty() && r.size() != out.front().size()) throw ConfigError(where + " rows differ in length");
        out.push_back(std::move(r));
    }
    return out;
}

json config_to_json(const ScenarioConfig& cfg) {
    json j;
    j["scenario"] = cfg.scenario;
    j["fixtures"] = cfg.fixtures;
    j["deltas"] = cfg.deltas;
    if (cfg.distribution_weights.empty())
        j["distribution"] = cfg.distribution;
    else
        j["distribution"] = cfg.distribution_weights;
    j["net_eps"] = cfg.net_eps;
    j["max_strategies"] = cfg.max_strategies;
    j["slack"] = cfg.slack;
    j["seed"] = cfg.seed;
    j["instances"] = cfg.instances;
    j["disj_n"] = cfg.disj_n;
    json fns = json::object();
    for (const auto& [name, fn] : cfg.functions) {
        fns[name]["table"] = fn.table;
        if (fn.bob_table) fns[name]["bob_table"] = *fn.bob_table;
    }
    j["functions"] = fns;
    return j;
}

// ---------------------------------------------------------------------------
// Jobs

struct Tag {
    std::string fixture_id;
    double delta;
};

struct Job : Tag {
    qlab::Fixture fixture;
    std::optional<qlab::JointDistribution> p;
};

struct JobResult {
    json detail;
    std::vector<BoundCheck> checks;
    SummaryRow row;
};

qlab::ClassicalFunction custom_function(const std::string& name, const CustomFunction& fn) {
    const auto nu = fn.table.size(), nv = fn.table.front().size();
    std::size_t out = 0;
    std::vector<std::size_t> flat;
    for (const auto& r : fn.table)
        for (auto x : r) flat.push_back(x), out = std::max(out, x + 1);
    std::optional<std::vector<std::size_t>> bob;
    if (fn.bob_table) {
        bob.emplace();
        for (const auto& r : *fn.bob_table)
            for (auto x : r) bob->push_back(x), out = std::max(out, x + 1);
    }
    return qlab::ClassicalFunction(name, nu, nv, std::max<std::size_t>(out, 2), std::move(flat), std::move(bob));
}

qlab::Fixture base_fixture(const ScenarioConfig& cfg, const std::string& id) {
    try {
        if (id.rfind("reveal-", 0) == 0) {
            const auto it = cfg.functions.find(id.substr(7));
            if (it != cfg.functions.end()) return qlab::classical_reveal_protocol(custom_function(it->first, it->second));
        }
        return qlab::make_fixture(id);
    } catch (const qlab::InvalidArgument& e) {
        throw ConfigError("fixture '" + id + "': " + e.what());
    }
}

qlab::JointDistribution make_distribution(const ScenarioConfig& cfg, const qlab::ClassicalFunction& f,
                                          std::size_t job_index) {
    const auto nu = f.u_size(), nv = f.v_size();
    if (!cfg.distribution_weights.empty()) {
        std::vector<double> w(nu * nv, 0.0);
        static const std::regex key_re(R"(([0-9]+),([0-9]+))");
        for (const auto& [key, weight] : cfg.distribution_weights) {
            std::smatch m;
            if (!std::regex_match(key, m, key_re)) throw ConfigError("distribution key '" + key + "' is not \"u,v\"");
            const auto u = std::stoul(m[1]), v = std::stoul(m[2]);
            if (u >= nu || v >= nv) throw ConfigError("distribution key '" + key + "' outside the input alphabet");
            w[u * nv + v] = weight;
        }
        double s = 0;
        for (double x : w) s += x;
        if (!(s > 0)) throw ConfigError("distribution weights sum to zero");
        for (double& x : w) x /= s;
        return qlab::JointDistribution(nu, nv, w);
    }
    if (cfg.distribution == "random") {
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                          static_cast<std::uint32_t>(job_index)};
        std::mt19937_64 rng(seq);
        std::exponential_distribution<double> e(1.0);
        std::vector<double> w(nu * nv);
        double s = 0;
        for (double& x : w) s += (x = e(rng));
        for (double& x : w) x /= s;
        return qlab::JointDistribution(nu, nv, w);
    }
    return qlab::JointDistribution::uniform(nu, nv);
}

std::vector<Job> prepare_jobs(const ScenarioConfig& cfg) {
    std::vector<std::string> ids = cfg.fixtures.empty() ? default_fixtures(cfg.scenario) : cfg.fixtures;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::vector<double> deltas = cfg.deltas;
    std::sort(deltas.begin(), deltas.end());
    deltas.erase(std::unique(deltas.begin(), deltas.end()), deltas.end());

    std::vector<Job> jobs;
    for (const auto& id : ids) {
        const auto base = base_fixture(cfg, id);
        const auto& name = base.function.name();
        if (cfg.scenario == "strengthen-eq" && name.rfind("eq-", 0) != 0)
            throw ConfigError("strengthen-eq needs an EQ fixture, got '" + id + "'");
        if (cfg.scenario == "strengthen-ip" && name.rfind("ip-", 0) != 0)
            throw ConfigError("strengthen-ip needs an IP fixture, got '" + id + "'");
        if (cfg.scenario == "appendix" && id.rfind("appendix-", 0) != 0)
            throw ConfigError("appendix scenario needs an appendix fixture, got '" + id + "'");
        if (cfg.scenario == "disj-tightness" && id.rfind("disj-perturbed-", 0) != 0)
            throw ConfigError("disj-tightness needs a disj-perturbed fixture, got '" + id + "'");
        for (double d : deltas) {
            Job job{{id, d}, d == 0.0 ? base : qlab::depolarize_fixture(base, d), std::nullopt};
            job.p = make_distribution(cfg, job.fixture.function, jobs.size());
            jobs.push_back(std::move(job));
        }
    }
    return jobs;
}

// ---------------------------------------------------------------------------
// Reporting helpers

BoundCheck check_ge(const Tag& j, std::string name, double measured, double threshold, double slack) {
    return {j.fixture_id, j.delta, std::move(name), measured, ">=", threshold, measured >= threshold - slack};
}
BoundCheck check_le(const Tag& j, std::string name, double measured, double threshold, double slack) {
    return {j.fixture_id, j.delta, std::move(name), measured, "<=", threshold, measured <= threshold + slack};
}
BoundCheck check_gt(const Tag& j, std::string name, double measured, double threshold) {
    return {j.fixture_id, j.delta, std::move(name), measured, ">", threshold, measured > threshold};
}
BoundCheck check_lt(const Tag& j, std::string name, double measured, double threshold) {
    return {j.fixture_id, j.delta, std::move(name), measured, "<", threshold, measured < threshold};
}

json table_json(const qlab::ConditionalDistribution& c) {
    json rows = json::array();
    for (std::size_t r = 0; r < c.row_count(); ++r) rows.push_back(c.has_row(r) ? json(c.row(r)) : json(nullptr));
    return rows;
}

json lemma_json(const qlab::AttackReport& a) {
    return {{"eps_corr", a.eps_corr},
            {"eps_sec", a.eps_sec},
            {"achieved_overlap", a.achieved_overlap},
            {"avg_success", a.check.avg_success},
            {"independence_defect", a.check.independence_defect},
            {"threshold_success", 1.0 - 6.0 * a.check.eps},
            {"threshold_defect", 6.0 * a.check.eps},
            {"pass", a.check.pass()},
            {"q", table_json(a.q)},
            {"q_tilde", table_json(a.q_tilde)}};
}

void add_lemma_checks(const Job& j, const qlab::AttackReport& a, double slack, std::vector<BoundCheck>& out) {
    out.push_back(check_ge(j, "lemma1_avg_success", a.check.avg_success, 1.0 - 6.0 * a.check.eps, slack));
    out.push_back(check_le(j, "lemma1_independence_defect", a.check.independence_defect, 6.0 * a.check.eps, slack));
}

SummaryRow lemma_row(const Job& j, const qlab::AttackReport& a) {
    SummaryRow r{j.fixture_id, j.delta, {}, {}, {}, {}, {}, {}, {}, {}, false};
    r.eps_corr = a.eps_corr;
    r.eps_sec = a.eps_sec;
    r.avg_success = a.check.avg_success;
    r.threshold_6 = 1.0 - 6.0 * a.check.eps;
    r.lemma1_pass = a.check.pass();
    return r;
}

json game_json(const qlab::Theorem2Run& run) {
    json points = json::array();
    for (const auto& p : run.points)
        points.push_back({{"numerators", p.numerators},
                          {"eps_corr", p.eps_corr},
                          {"eps_sec", p.eps_sec},
                          {"achieved_overlap", p.achieved_overlap},
                          {"lemma_value", p.lemma_value}});
    json payoff = json::array();
    for (Eigen::Index r = 0; r < run.game.payoff.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(run.game.payoff.cols()));
        for (Eigen::Index c = 0; c < run.game.payoff.cols(); ++c) row[static_cast<std::size_t>(c)] = run.game.payoff(r, c);
        payoff.push_back(row);
    }
    json checks = json::array();
    for (const auto& c : run.checks)
        checks.push_back({{"u0", c.u0},
                          {"min_success", c.min_success},
                          {"worst_u", c.worst_u},
                          {"worst_v", c.worst_v},
                          {"threshold", 1.0 - 28.0 * c.eps},
                          {"pass", c.pass}});
    return {{"eps", run.eps},
            {"net_eps", run.net_eps},
            {"denominator", run.denominator},
            {"converged", run.converged},
            {"chain_pass", run.chain_pass},
            {"points", points},
            {"game",
             {{"payoff", payoff},
              {"value", run.game.value},
              {"row_strategy", run.game.row_strategy},
              {"col_strategy", run.game.col_strategy},
              {"primal_value", run.game.primal_value},
              {"dual_value", run.game.dual_value},
              {"duality_gap", run.game.duality_gap()}}},
            {"combined", {{"weights", run.combined.weights}, {"eps1", run.combined.eps1}, {"eps2", run.combined.eps2},
                          {"Q", table_json(run.combined.Q)}}},
            {"checks", checks},
            {"pass", run.pass()}};
}

// ---------------------------------------------------------------------------
// Scenarios

JobResult run_theorem1(const ScenarioConfig& cfg, const Job& j) {
    const auto& fx = j.fixture;
    const auto a = qlab::run_attack(fx.id, fx.protocol, fx.function, *j.p, fx.ideal_adversary, cfg.slack);
    JobResult res;
    res.detail = {{"lemma1", lemma_json(a)}};
    res.checks.push_back(check_le(j, "eps_corr", a.eps_corr, 0.0, 1e-9));
    res.checks.push_back(check_le(j, "eps_sec", a.eps_sec, 0.0, 1e-9));
    json rows = json::array();
    bool all = true;
    for (std::size_t v = 0; v < fx.function.v_size(); ++v) {
        if (!a.q_tilde.has_row(v)) continue;
        const auto ex = qlab::theorem1_extract(a.q_tilde, fx.function, v);
        // the recovered row must be f(·, v) itself
        bool exact = ex.pass;
        for (std::size_t u = 0; u < fx.function.u_size() && exact; ++u) exact = ex.row.at(u) == fx.function(u, v);
        all = all && exact;
        rows.push_back({{"v", v}, {"row", ex.row}, {"occurring", ex.occurring}, {"exact", exact}});
    }
    res.detail["extraction"] = rows;
    res.checks.push_back(check_ge(j, "theorem1_rows_exact", all ? 1.0 : 0.0, 1.0, 0.0));
    add_lemma_checks(j, a, cfg.slack, res.checks);
    res.row = lemma_row(j, a);
    return res;
}

JobResult run_lemma1(const ScenarioConfig& cfg, const Job& j) {
    const auto& fx = j.fixture;
    const auto a = qlab::run_attack(fx.id, fx.protocol, fx.function, *j.p, fx.ideal_adversary, cfg.slack);
    JobResult res;
    res.detail = {{"lemma1", lemma_json(a)}};
    add_lemma_checks(j, a, cfg.slack, res.checks);
    res.row = lemma_row(j, a);
    return res;
}

JobResult run_game(const ScenarioConfig& cfg, const Job& j) {
    const auto& fx = j.fixture;
    const auto& f = fx.function;
    const auto a = qlab::run_attack(fx.id, fx.protocol, f, *j.p, fx.ideal_adversary, cfg.slack);
    qlab::Theorem2Config tc;
    tc.net_eps = cfg.net_eps;
    tc.max_strategies = cfg.max_strategies;
    tc.slack = cfg.slack;
    const auto run = qlab::run_theorem2(fx.protocol, f, fx.ideal_adversary, tc);

    JobResult res;
    res.detail = {{"lemma1", lemma_json(a)}, {"theorem2", game_json(run)}};
    add_lemma_checks(j, a, cfg.slack, res.checks);
    const double eps = run.eps;
    res.checks.push_back(check_le(j, "duality_gap", std::abs(run.game.duality_gap()), 1e-9, 0.0));
    res.checks.push_back(check_ge(j, "search_converged", run.converged ? 1.0 : 0.0, 1.0, 0.0));
    for (std::size_t i = 0; i < run.points.size(); ++i)
        res.checks.push_back(check_ge(j, "net_point_" + std::to_string(i) + "_lemma_value", run.points[i].lemma_value,
                                      1.0 - 12.0 * eps, cfg.slack));
    res.checks.push_back(check_ge(j, "game_value", run.game.value, 1.0 - 14.0 * eps, cfg.slack));
    double min_success = 1.0;
    for (const auto& c : run.checks) {
        res.checks.push_back(
            check_ge(j, "theorem2_min_success_u0=" + std::to_string(c.u0), c.min_success, 1.0 - 28.0 * eps, cfg.slack));
        min_success = std::min(min_success, c.min_success);
    }

    if (cfg.scenario == "strengthen-eq") {
        json rec = json::array();
        for (std::size_t u0 = 0; u0 < f.u_size(); ++u0) {
            const auto r = qlab::strengthen_eq(run.combined.Q, u0, eps, cfg.slack);
            rec.push_back({{"u0", u0}, {"recovery", r.recovery}, {"threshold", r.threshold}, {"pass", r.pass}});
            res.checks.push_back(
                check_ge(j, "eq_recovery_u0=" + std::to_string(u0), r.min_recovery, r.threshold, cfg.slack));
        }
        res.detail["strengthen_eq"] = rec;
    } else if (cfg.scenario == "strengthen-ip") {
        const auto n = static_cast<std::size_t>(std::countr_zero(f.v_size()));
        json rec = json::array();
        for (std::size_t u0 = 0; u0 < f.u_size(); ++u0) {
            const auto r = qlab::strengthen_ip(run.combined.Q, u0, eps, n, cfg.slack);
            rec.push_back({{"u0", u0},
                           {"recovery", r.check.recovery},
                           {"averaged_success", r.averaged_success},
                           {"implied", r.implied},
                           {"threshold", r.check.threshold},
                           {"pass", r.check.pass}});
            res.checks.push_back(
                check_ge(j, "ip_recovery_u0=" + std::to_string(u0), r.check.min_recovery, r.check.threshold, cfg.slack));
        }
        res.detail["strengthen_ip"] = rec;
    }

    res.row = lemma_row(j, a);
    res.row.min_success = min_success;
    res.row.threshold_28 = 1.0 - 28.0 * eps;
    res.row.theorem2_pass = run.pass();
    return res;
}

JobResult run_appendix(const ScenarioConfig& cfg, const Job& j) {
    auto res = run_theorem1(cfg, j);
    const auto two = qlab::two_copies_simulator_check(1, true);
    const auto comp = qlab::two_copies_simulator_check(1, false);
    res.detail["two_copies"] = {{"hadamard", {{"tv_without_R", two.tv_without_R}, {"distance_with_R", two.distance_with_R}}},
                                {"computational",
                                 {{"tv_without_R", comp.tv_without_R}, {"distance_with_R", comp.distance_with_R}}}};
    res.checks.push_back(check_le(j, "two_copies_tv_without_R", two.tv_without_R, 0.0, 1e-9));
    res.checks.push_back(check_gt(j, "two_copies_distance_with_R", two.distance_with_R, 0.0));
    res.checks.push_back(check_le(j, "two_copies_computational_distance", comp.distance_with_R, 0.0, 1e-9));
    return res;
}

JobResult run_disj(const ScenarioConfig& cfg, const Job& j) {
    const auto& fx = j.fixture;
    const auto& f = fx.function;
    const auto n = static_cast<std::size_t>(std::countr_zero(f.v_size()));
    const auto base = qlab::classical_reveal_protocol(qlab::make_function(qlab::FunctionKind::DISJ, n));
    const auto a = qlab::run_attack(fx.id, fx.protocol, f, *j.p, fx.ideal_adversary, cfg.slack);
    const double base_sec = qlab::security_epsilon(base.protocol, base.function, *j.p, base.ideal_adversary);

    JobResult res;
    res.detail = {{"lemma1", lemma_json(a)}, {"base_eps_sec", base_sec}};
    res.checks.push_back(check_le(j, "eps_sec_shift", std::abs(a.eps_sec - base_sec), 0.0, 1e-8));
    res.checks.push_back(check_gt(j, "eps_corr", a.eps_corr, 0.0));

    // Exact-v recovery on heavy inputs against the rate an EQ-type
    // conclusion would guarantee at this ε.
    const double eq_rate = 1.0 - 28.0 * a.eps_sec;
    json heavy = json::array();
    for (std::size_t v = 0; v < f.v_size(); ++v) {
        if (2 * static_cast<std::size_t>(std::popcount(v)) <= n) continue;
        double mass = 0, hit = 0;
        for (std::size_t u = 0; u < f.u_size(); ++u) {
            const double w = (*j.p)(u, v);
            if (w <= 0) continue;
            mass += w;
            hit += w * a.q(u * f.v_size() + v, v);
        }
        if (mass <= 0) continue;
        const double rate = hit / mass;
        heavy.push_back({{"v", v}, {"recovery", rate}});
        res.checks.push_back(check_lt(j, "heavy_recovery_v=" + std::to_string(v), rate, eq_rate));
    }
    res.detail["heavy_recovery"] = heavy;
    res.detail["eq_style_rate"] = eq_rate;

    json enumeration = json::array();
    std::optional<double> previous;
    for (std::size_t m : cfg.disj_n) {
        const auto e = qlab::disj_correctness_enumeration(m);
        enumeration.push_back({{"n", e.n},
                               {"flips", e.flips},
                               {"worst_error", e.worst_error},
                               {"mean_error", e.mean_error},
                               {"uniform_distance", e.uniform_distance}});
        res.checks.push_back(check_gt(j, "disj_slack_n=" + std::to_string(m), e.worst_error, 0.0));
        if (previous) res.checks.push_back(check_lt(j, "disj_slack_shrinks_n=" + std::to_string(m), e.worst_error, *previous));
        previous = e.worst_error;
    }
    res.detail["enumeration"] = enumeration;

    res.row = lemma_row(j, a);
    res.row.lemma1_pass.reset();
    return res;
}

JobResult run_job(const ScenarioConfig& cfg, const Job& j) {
    if (cfg.scenario == "theorem1") return run_theorem1(cfg, j);
    if (cfg.scenario == "lemma1") return run_lemma1(cfg, j);
    if (cfg.scenario == "appendix") return run_appendix(cfg, j);
    if (cfg.scenario == "disj-tightness") return run_disj(cfg, j);
    return run_game(cfg, j);
}

ScenarioResult run_selftest_scenario(const ScenarioConfig& cfg) {
    const auto rep = qcore_selftest(cfg.seed, cfg.instances);
    ScenarioResult out;
    const Tag j{"qcore", 0.0};
    json props = json::object();
    for (const auto& [name, worst] : rep.worst_error) {
        props[name] = {{"worst_error", worst}, {"tolerance", rep.tolerance.at(name)}};
        out.checks.push_back(check_le(j, name, worst, rep.tolerance.at(name), 0.0));
    }
    out.report["results"] = json::array({{{"fixture", "qcore"},
                                          {"instances", rep.instances},
                                          {"failures", rep.failures},
                                          {"properties", props},
                                          {"messages", rep.messages}}});
    SummaryRow row{"qcore", 0.0, {}, {}, {}, {}, {}, {}, {}, {}, rep.pass()};
    out.summary.push_back(row);
    return out;
}

std::string pass_cell(const std::optional<bool>& b) { return b ? (*b ? "pass" : "fail") : "n/a"; }
std::string num_cell(const std::optional<double>& x) { return x ? format_number(*x) : ""; }

}  // namespace

// ---------------------------------------------------------------------------

ScenarioConfig parse_config(const json& doc, const std::string& scenario) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : doc.items())
        if (!kKnownKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");

    ScenarioConfig cfg;
    cfg.scenario = scenario;
    if (doc.contains("scenario") && get_as<std::string>(doc, "scenario") != scenario)
        throw ConfigError("config scenario '" + doc.at("scenario").get<std::string>() + "' does not match '" + scenario +
                          "'");
    if (doc.contains("fixtures")) cfg.fixtures = get_as<std::vector<std::string>>(doc, "fixtures");
    if (doc.contains("deltas")) {
        if (!doc.at("deltas").is_array()) throw ConfigError("config key 'deltas' must be an array");
        cfg.deltas.clear();
        for (const auto& d : doc.at("deltas")) {
            if (!d.is_number()) throw ConfigError("config key 'deltas' must hold numbers");
            cfg.deltas.push_back(d.get<double>());
        }
    } else if (scenario == "lemma1") {
        throw ConfigError("scenario lemma1 requires 'deltas'");
    }
    if (needs_fixtures(scenario) && !doc.contains("fixtures"))
        throw ConfigError("scenario " + scenario + " requires 'fixtures'");
    if (doc.contains("distribution")) {
        const auto& d = doc.at("distribution");
        if (d.is_string()) {
            cfg.distribution = d.get<std::string>();
        } else if (d.is_object()) {
            cfg.distribution = "weights";
            for (const auto& [k, w] : d.items()) {
                if (!w.is_number()) throw ConfigError("distribution weights must be numbers");
                cfg.distribution_weights[k] = w.get<double>();
            }
        } else {
            throw ConfigError("config key 'distribution' must be a string or a weight map");
        }
    }
    if (doc.contains("net_eps")) cfg.net_eps = get_real(doc, "net_eps");
    if (doc.contains("max_strategies")) cfg.max_strategies = get_count(doc, "max_strategies");
    if (doc.contains("slack")) cfg.slack = get_real(doc, "slack");
    if (doc.contains("seed")) cfg.seed = get_count(doc, "seed");
    if (doc.contains("out")) cfg.out = get_as<std::string>(doc, "out");
    if (doc.contains("parallel")) cfg.parallel = get_as<bool>(doc, "parallel");
    if (doc.contains("instances")) cfg.instances = get_count(doc, "instances");
    if (doc.contains("disj_n")) cfg.disj_n = get_as<std::vector<std::size_t>>(doc, "disj_n");
    if (doc.contains("functions")) {
        const auto& fns = doc.at("functions");
        if (!fns.is_object()) throw ConfigError("config key 'functions' must be an object");
        for (const auto& [name, spec] : fns.items()) {
            if (!spec.is_object()) throw ConfigError("function '" + name + "' must be an object");
            for (const auto& [k, v] : spec.items())
                if (k != "table" && k != "bob_table") throw ConfigError("unknown key '" + k + "' in function '" + name + "'");
            if (!spec.contains("table")) throw ConfigError("function '" + name + "' needs a 'table'");
            CustomFunction fn;
            fn.table = get_table(spec.at("table"), "function '" + name + "' table");
            if (spec.contains("bob_table")) fn.bob_table = get_table(spec.at("bob_table"), "function '" + name + "' bob_table");
            cfg.functions[name] = std::move(fn);
        }
    }
    validate(cfg);
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& file, const std::string& scenario) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config file '" + file.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + file.string() + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc, scenario);
}

void validate(const ScenarioConfig& cfg) {
    const auto& names = scenario_names();
    if (std::find(names.begin(), names.end(), cfg.scenario) == names.end())
        throw ConfigError("unknown scenario '" + cfg.scenario + "'");
    if (cfg.deltas.empty()) throw ConfigError("'deltas' must not be empty");
    for (double d : cfg.deltas)
        if (!(d >= 0.0 && d <= 1.0)) throw ConfigError("noise rate " + format_number(d) + " outside [0, 1]");
    if (cfg.scenario == "theorem1" || cfg.scenario == "appendix")
        for (double d : cfg.deltas)
            if (d != 0.0) throw ConfigError("scenario " + cfg.scenario + " runs noiseless fixtures only (deltas = [0])");
    if (needs_fixtures(cfg.scenario) && cfg.fixtures.empty()) throw ConfigError("'fixtures' must not be empty");
    if (cfg.distribution != "uniform" && cfg.distribution != "random" && cfg.distribution != "weights")
        throw ConfigError("distribution must be \"uniform\", \"random\" or a weight map");
    for (const auto& [k, w] : cfg.distribution_weights)
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("distribution weight for '" + k + "' must be ≥ 0");
    if (!(cfg.net_eps >= 0.0 && cfg.net_eps <= 1.0)) throw ConfigError("net_eps outside [0, 1]");
    if (cfg.max_strategies < 1 || cfg.max_strategies > 1000) throw ConfigError("max_strategies outside 1..1000");
    if (!(cfg.slack > 0.0 && cfg.slack < 1.0)) throw ConfigError("slack outside (0, 1)");
    if (cfg.instances < 1 || cfg.instances > 1000000) throw ConfigError("instances outside 1..1000000");
    if (cfg.disj_n.size() < 2) throw ConfigError("disj_n needs at least two sizes");
    for (std::size_t i = 0; i < cfg.disj_n.size(); ++i) {
        if (cfg.disj_n[i] < 1 || cfg.disj_n[i] > 12) throw ConfigError("disj_n entries must lie in 1..12");
        if (i > 0 && cfg.disj_n[i] <= cfg.disj_n[i - 1]) throw ConfigError("disj_n must be increasing");
    }
    static const std::regex name_re("[a-z][a-z0-9_]*");
    for (const auto& [name, fn] : cfg.functions) {
        if (!std::regex_match(name, name_re)) throw ConfigError("function name '" + name + "' must match [a-z][a-z0-9_]*");
        if (fn.table.size() > 16 || fn.table.front().size() > 16) throw ConfigError("function '" + name + "' exceeds 16×16");
        if (fn.bob_table && (fn.bob_table->size() != fn.table.size() || fn.bob_table->front().size() != fn.table.front().size()))
            throw ConfigError("function '" + name + "' bob_table shape differs from table");
    }
    if (cfg.out.empty()) throw ConfigError("'out' must not be empty");
}

bool ScenarioResult::pass() const {
    if (summary.empty()) return false;
    for (const auto& c : checks)
        if (!c.pass) return false;
    for (const auto& r : summary)
        if (!r.pass) return false;
    return true;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    validate(cfg);
    ScenarioResult out;
    if (cfg.scenario == "qcore-selftest") {
        out = run_selftest_scenario(cfg);
    } else {
        const auto jobs = prepare_jobs(cfg);
        std::vector<JobResult> results;
        if (cfg.parallel) {
            std::vector<std::future<JobResult>> futures;
            for (const auto& j : jobs) futures.push_back(std::async(std::launch::async, [&cfg, &j] { return run_job(cfg, j); }));
            for (auto& f : futures) results.push_back(f.get());
        } else {
            for (const auto& j : jobs) results.push_back(run_job(cfg, j));
        }
        out.report["results"] = json::array();
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            auto& r = results[i];
            bool pass = true;
            for (const auto& c : r.checks) pass = pass && c.pass;
            r.row.pass = pass;
            json entry = {{"fixture", jobs[i].fixture_id}, {"delta", jobs[i].delta}, {"p", jobs[i].p->weights()}, {"pass", pass}};
            entry.update(r.detail);
            out.report["results"].push_back(entry);
            out.checks.insert(out.checks.end(), r.checks.begin(), r.checks.end());
            out.summary.push_back(r.row);
        }
    }

    json checks = json::array();
    for (const auto& c : out.checks)
        checks.push_back({{"fixture", c.fixture},
                          {"delta", c.delta},
                          {"check", c.check},
                          {"measured", c.measured},
                          {"relation", c.relation},
                          {"threshold", c.threshold},
                          {"pass", c.pass}});
    json summary = json::array();
    for (const auto& r : out.summary) {
        auto opt = [](const std::optional<double>& x) { return x ? json(*x) : json(nullptr); };
        auto optb = [](const std::optional<bool>& x) { return x ? json(*x) : json(nullptr); };
        summary.push_back({{"fixture", r.fixture},
                           {"delta", r.delta},
                           {"eps_corr", opt(r.eps_corr)},
                           {"eps_sec", opt(r.eps_sec)},
                           {"avg_success", opt(r.avg_success)},
                           {"threshold_6eps", opt(r.threshold_6)},
                           {"min_success", opt(r.min_success)},
                           {"threshold_28eps", opt(r.threshold_28)},
                           {"lemma1_pass", optb(r.lemma1_pass)},
                           {"theorem2_pass", optb(r.theorem2_pass)},
                           {"pass", r.pass}});
    }
    out.report["schema_version"] = kSchemaVersion;
    out.report["scenario"] = cfg.scenario;
    out.report["seed"] = cfg.seed;
    out.report["config"] = config_to_json(cfg);
    out.report["checks"] = checks;
    out.report["summary"] = summary;
    out.report["pass"] = out.pass();
    return out;
}

std::string format_number(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

std::string checks_csv(const std::string& scenario, const std::vector<BoundCheck>& checks) {
    std::ostringstream os;
    os << kChecksHeader << '\n';
    for (const auto& c : checks)
        os << scenario << ',' << c.fixture << ',' << format_number(c.delta) << ',' << c.check << ','
           << format_number(c.measured) << ',' << c.relation << ',' << format_number(c.threshold) << ','
           << (c.pass ? "pass" : "fail") << '\n';
    return os.str();
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
    std::ostringstream os;
    os << kSummaryHeader << '\n';
    for (const auto& r : rows)
        os << r.fixture << ',' << format_number(r.delta) << ',' << num_cell(r.eps_corr) << ',' << num_cell(r.eps_sec) << ','
           << num_cell(r.avg_success) << ',' << num_cell(r.threshold_6) << ',' << num_cell(r.min_success) << ','
           << num_cell(r.threshold_28) << ',' << pass_cell(r.lemma1_pass) << ',' << pass_cell(r.theorem2_pass) << ','
           << (r.pass ? "pass" : "fail") << '\n';
    return os.str();
}

std::string summary_table(const std::vector<SummaryRow>& rows) {
    auto cell = [](const std::optional<double>& x) {
        if (!x) return std::string("-");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", *x);
        return std::string(buf);
    };
    std::ostringstream os;
    char line[512];
    std::snprintf(line, sizeof line, "%-22s %6s %10s %10s %10s %10s %10s %10s %7s %7s %5s\n", "fixture", "delta", "eps_corr",
                  "eps_sec", "avg_succ", "1-6eps", "min_succ", "1-28eps", "lemma1", "thm2", "pass");
    os << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-22s %6.3f %10s %10s %10s %10s %10s %10s %7s %7s %5s\n", r.fixture.c_str(),
                      r.delta, cell(r.eps_corr).c_str(), cell(r.eps_sec).c_str(), cell(r.avg_success).c_str(),
                      cell(r.threshold_6).c_str(), cell(r.min_success).c_str(), cell(r.threshold_28).c_str(),
                      pass_cell(r.lemma1_pass).c_str(), pass_cell(r.theorem2_pass).c_str(), r.pass ? "pass" : "fail");
        os << line;
    }
    return os.str();
}

void write_reports(const ScenarioConfig& cfg, const ScenarioResult& result) {
    std::filesystem::create_directories(cfg.out);
    auto write = [](const std::filesystem::path& p, const std::string& text) {
        std::ofstream f(p, std::ios::binary);
        f << text;
        if (!f) throw std::runtime_error("cannot write " + p.string());
    };
    write(cfg.out / (cfg.scenario + ".json"), result.report.dump(2) + "\n");
    write(cfg.out / (cfg.scenario + "_checks.csv"), checks_csv(cfg.scenario, result.checks));
    write(cfg.out / (cfg.scenario + "_summary.csv"), summary_csv(result.summary));
}

}  // namespace lab
