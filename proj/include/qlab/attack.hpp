#pragma once

// Cheating Alice against a protocol that is secure against Bob: the Uhlmann
// isometry between the honest-but-purified run and a purified secure state,
// the distributions it induces, and the average-case bound checks.

#include <optional>
#include <string>
#include <vector>

#include "qlab/proto.hpp"

namespace qlab {

/// Rows indexed by a conditioning value (u·|V| + v, or v), each a
/// distribution over outcomes.  Rows may be absent (zero conditioning mass).
class ConditionalDistribution {
public:
    ConditionalDistribution() = default;
    ConditionalDistribution(std::size_t row_count, std::size_t outcome_size);

    std::size_t row_count() const { return rows_.size(); }
    std::size_t outcome_size() const { return outcome_size_; }

    /// Normalizes `weights` and stores it; throws if the total is not positive.
    void set_row(std::size_t row, std::vector<double> weights);
    bool has_row(std::size_t row) const { return rows_.at(row).has_value(); }
    const std::vector<double>& row(std::size_t row) const;
    double operator()(std::size_t row, std::size_t outcome) const { return this->row(row).at(outcome); }

private:
    std::size_t outcome_size_ = 0;
    std::vector<std::optional<std::vector<double>>> rows_;
};

/// Builds rows from a joint table joint[row·outcomes + outcome]; rows whose
/// mass is at most `floor` are left absent.
ConditionalDistribution conditional_from_joint(const std::vector<double>& joint, std::size_t row_count,
                                               std::size_t outcome_size, double floor = 1e-14);

struct CheatIsometry {
    /// T: X′₁ → P Vt (and the padding register when needed).
    QuantumChannel map;
    JointDistribution source;
    double achieved_overlap;
    /// Purified distance between the real and secure states it was built from.
    double eps_sec;
    /// q̃(ṽ|v) of the secure state it was built against.
    ConditionalDistribution q_tilde;
};

/// |Ψ⟩ on R, X, Vt, the adversary's outputs and P.
PureState build_secure_purification(const ClassicalFunction& f, const JointDistribution& p,
                                    const IdealAdversary& adversary);

/// q̃(ṽ|v) read from the secure state's classical (R, Vt) marginal.  Rows
/// with zero v-mass under p are absent.
ConditionalDistribution secure_q_tilde(const ClassicalFunction& f, const JointDistribution& p,
                                       const IdealAdversary& adversary);

CheatIsometry construct_cheat_isometry(const TwoPartyProtocol& protocol, const ClassicalFunction& f,
                                       const JointDistribution& p, const IdealAdversary& adversary);

struct AttackOutcome {
    /// q(ṽ|u,v), rows u·|V| + v.
    ConditionalDistribution q;
    /// r(x|u,v,ṽ), rows (u·|V| + v)·|V| + ṽ.
    ConditionalDistribution r;
    /// Joint distribution of (u, v, ṽ, x) read off R, Vt, X.
    std::vector<double> joint;
};

/// Alice runs honest-but-purified, applies T to X′₁ and measures Vt; R and X
/// are measured alongside.  Rows with p(u, v) = 0 are absent.
AttackOutcome execute_attack(const TwoPartyProtocol& protocol, const JointDistribution& p, const CheatIsometry& t);

struct Lemma1Check {
    double avg_success;
    double independence_defect;
    double eps;
    bool success_pass;
    bool independence_pass;
    bool pass() const { return success_pass && independence_pass; }
};

/// avg_success = Σ p q δ_{f(u,v), f(u,ṽ)}, independence_defect =
/// Σ p |q − q̃|; passes iff they meet 1 − 6ε and 6ε within slack.
Lemma1Check lemma1_check(const ConditionalDistribution& q, const ConditionalDistribution& q_tilde,
                         const JointDistribution& p, const ClassicalFunction& f, double eps, double slack = 1e-8);

struct Theorem1Extraction {
    /// f(·, ṽ) for the ṽ values that occur; all equal when pass is set.
    std::vector<std::size_t> row;
    std::vector<std::size_t> occurring;
    bool pass;
};

/// Every ṽ with q̃(ṽ|v) > 1e-9 must satisfy f(u, ṽ) = f(u, v) for all u.
Theorem1Extraction theorem1_extract(const ConditionalDistribution& q_tilde, const ClassicalFunction& f,
                                    std::size_t v);

struct AttackReport {
    std::string fixture_id;
    double eps_corr;
    double eps_sec;
    double achieved_overlap;
    ConditionalDistribution q;
    ConditionalDistribution q_tilde;
    Lemma1Check check;
};

/// Full pipeline for one distribution.  The bounds are checked against
/// ε = eps_sec; eps_corr is reported alongside.
AttackReport run_attack(const std::string& fixture_id, const TwoPartyProtocol& protocol, const ClassicalFunction& f,
                        const JointDistribution& p, const IdealAdversary& adversary, double slack = 1e-8);

}  // namespace qlab
