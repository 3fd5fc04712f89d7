#include "qlab/attack.hpp"

#include <cmath>

#include "qlab/linalg.hpp"

namespace qlab {

// ---------------------------------------------------------------------------
// ConditionalDistribution

ConditionalDistribution::ConditionalDistribution(std::size_t row_count, std::size_t outcome_size)
    : outcome_size_(outcome_size), rows_(row_count) {
    if (outcome_size == 0) throw InvalidArgument("conditional distribution needs at least one outcome");
}

void ConditionalDistribution::set_row(std::size_t row, std::vector<double> weights) {
    if (weights.size() != outcome_size_) throw InvalidArgument("conditional row has the wrong length");
    linalg::KahanSum total;
    for (double w : weights) {
        if (!(w >= -1e-12)) throw InvalidArgument("conditional row has a negative entry");
        total.add(w);
    }
    if (!(total.value() > 0)) throw InvalidArgument("conditional row has no mass");
    for (auto& w : weights) w = std::max(0.0, w) / total.value();
    rows_.at(row) = std::move(weights);
}

const std::vector<double>& ConditionalDistribution::row(std::size_t row) const {
    const auto& r = rows_.at(row);
    if (!r) throw InvalidArgument("conditional row " + std::to_string(row) + " is absent");
    return *r;
}

ConditionalDistribution conditional_from_joint(const std::vector<double>& joint, std::size_t row_count,
                                               std::size_t outcome_size, double floor) {
    if (joint.size() != row_count * outcome_size) throw InvalidArgument("joint table has the wrong size");
    ConditionalDistribution out(row_count, outcome_size);
    for (std::size_t r = 0; r < row_count; ++r) {
        std::vector<double> w(joint.begin() + static_cast<std::ptrdiff_t>(r * outcome_size),
                              joint.begin() + static_cast<std::ptrdiff_t>((r + 1) * outcome_size));
        linalg::KahanSum mass;
        for (double x : w) mass.add(x);
        if (mass.value() > floor) out.set_row(r, std::move(w));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Construction

PureState build_secure_purification(const ClassicalFunction& f, const JointDistribution& p,
                                    const IdealAdversary& adversary) {
    return run_ideal_purified(f, p, adversary, true, "P");
}

ConditionalDistribution secure_q_tilde(const ClassicalFunction& f, const JointDistribution& p,
                                       const IdealAdversary& adversary) {
    const auto psi = build_secure_purification(f, p, adversary);
    const auto rv = marginal_distribution(psi, {labels::R, labels::Vt});
    const std::size_t nv = f.v_size();
    std::vector<double> joint(nv * nv, 0.0);
    for (std::size_t u = 0; u < f.u_size(); ++u)
        for (std::size_t v = 0; v < nv; ++v)
            for (std::size_t vt = 0; vt < nv; ++vt) joint[v * nv + vt] += rv[(u * nv + v) * nv + vt];
    return conditional_from_joint(joint, nv, nv);
}

CheatIsometry construct_cheat_isometry(const TwoPartyProtocol& protocol, const ClassicalFunction& f,
                                       const JointDistribution& p, const IdealAdversary& adversary) {
    const auto run = run_purified(protocol, p);
    const auto psi = build_secure_purification(f, p, adversary);
    const auto keep = run.phi.system().complement(run.alice_purification).labels();
    for (const auto& l : keep)
        if (!psi.system().contains(l))
            throw InvalidArgument("construct_cheat_isometry: secure state lacks register '" + l + "'");
    auto uhl = uhlmann_isometry(run.phi, psi, run.alice_purification, {labels::Vt, "P"});
    const double eps = purified_distance(run.phi, psi, keep);

    // Simulators act on V alone, so q̃ does not depend on p; rows that p
    // leaves empty are read from the uniform secure state.
    auto q_tilde = secure_q_tilde(f, p, adversary);
    bool complete = true;
    for (std::size_t v = 0; v < q_tilde.row_count(); ++v) complete = complete && q_tilde.has_row(v);
    if (!complete) {
        const auto full = secure_q_tilde(f, JointDistribution::uniform(f.u_size(), f.v_size()), adversary);
        for (std::size_t v = 0; v < q_tilde.row_count(); ++v)
            if (!q_tilde.has_row(v)) q_tilde.set_row(v, full.row(v));
    }
    return CheatIsometry{std::move(uhl.map), p, std::min(1.0, uhl.overlap), eps, std::move(q_tilde)};
}

// ---------------------------------------------------------------------------
// Execution and checks

AttackOutcome execute_attack(const TwoPartyProtocol& protocol, const JointDistribution& p, const CheatIsometry& t) {
    const auto run = run_purified(protocol, p);
    const auto state = apply_isometry(t.map, run.phi);
    const std::size_t nr = p.u_size() * p.v_size();
    const std::size_t nv = p.v_size();
    const std::size_t nx = protocol.x_size();
    if (state.system().at(labels::Vt).dim != nv) throw InvalidArgument("execute_attack: Vt has the wrong dimension");
    auto joint = marginal_distribution(state, {labels::R, labels::Vt, labels::X});

    std::vector<double> rv(nr * nv, 0.0);
    for (std::size_t i = 0; i < nr * nv; ++i) {
        linalg::KahanSum s;
        for (std::size_t x = 0; x < nx; ++x) s.add(joint[i * nx + x]);
        rv[i] = s.value();
    }
    auto q = conditional_from_joint(rv, nr, nv);
    auto r = conditional_from_joint(joint, nr * nv, nx);
    return AttackOutcome{std::move(q), std::move(r), std::move(joint)};
}

Lemma1Check lemma1_check(const ConditionalDistribution& q, const ConditionalDistribution& q_tilde,
                         const JointDistribution& p, const ClassicalFunction& f, double eps, double slack) {
    const std::size_t nu = f.u_size(), nv = f.v_size();
    if (q.row_count() != nu * nv || q.outcome_size() != nv || q_tilde.row_count() != nv || q_tilde.outcome_size() != nv)
        throw InvalidArgument("lemma1_check: table shapes do not match the function");
    linalg::KahanSum success, defect;
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t v = 0; v < nv; ++v) {
            const double w = p(u, v);
            if (w <= 0) continue;
            const auto& row = q.row(u * nv + v);
            const auto& base = q_tilde.row(v);
            for (std::size_t vt = 0; vt < nv; ++vt) {
                if (f(u, v) == f(u, vt)) success.add(w * row[vt]);
                defect.add(w * std::abs(row[vt] - base[vt]));
            }
        }
    const double s = success.value(), d = defect.value();
    return Lemma1Check{s, d, eps, s >= 1.0 - 6.0 * eps - slack, d <= 6.0 * eps + slack};
}

Theorem1Extraction theorem1_extract(const ConditionalDistribution& q_tilde, const ClassicalFunction& f,
                                    std::size_t v) {
    const auto& row = q_tilde.row(v);
    Theorem1Extraction out{{}, {}, true};
    for (std::size_t vt = 0; vt < row.size(); ++vt) {
        if (row[vt] <= 1e-9) continue;
        out.occurring.push_back(vt);
        std::vector<std::size_t> values(f.u_size());
        for (std::size_t u = 0; u < f.u_size(); ++u) {
            values[u] = f(u, vt);
            if (values[u] != f(u, v)) out.pass = false;
        }
        if (out.row.empty()) out.row = std::move(values);
    }
    if (out.occurring.empty()) out.pass = false;
    return out;
}

AttackReport run_attack(const std::string& fixture_id, const TwoPartyProtocol& protocol, const ClassicalFunction& f,
                        const JointDistribution& p, const IdealAdversary& adversary, double slack) {
    const auto t = construct_cheat_isometry(protocol, f, p, adversary);
    auto outcome = execute_attack(protocol, p, t);
    const double eps_corr = correctness_epsilon(protocol, f, p);
    const auto check = lemma1_check(outcome.q, t.q_tilde, p, f, t.eps_sec, slack);
    return AttackReport{fixture_id, eps_corr, t.eps_sec, t.achieved_overlap, std::move(outcome.q), t.q_tilde, check};
}

}  // namespace qlab
