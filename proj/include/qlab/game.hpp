#pragma once

// Mixing cheat isometries built for different input distributions: a grid
// over the distribution simplex, the payoff g(u, v, T), an exact zero-sum
// solve for the mixture p″(T), and the bound checks on the mixed guess Q.

#include <Eigen/Dense>
#include <vector>

#include "qlab/attack.hpp"

namespace qlab {

/// Distributions over w_size outcomes with coordinates k/denominator.
struct SimplexNet {
    std::size_t w_size;
    double resolution;
    std::size_t denominator;
    std::vector<std::vector<double>> points;
};

/// Smallest denominator N with w_size/(2N) ≤ eps, so that largest-remainder
/// rounding lands within total variation eps.
std::size_t net_denominator(std::size_t w_size, double eps);

/// Number of grid points, C(N + w − 1, w − 1), as a double (may overflow size_t).
double net_size(std::size_t w_size, std::size_t denominator);

SimplexNet build_simplex_net(std::size_t w_size, double eps, std::size_t cap = 100000);

/// Largest-remainder rounding onto the grid with the given denominator;
/// returns the integer numerators.
std::vector<std::size_t> round_to_grid(const std::vector<double>& p, std::size_t denominator);

struct ZeroSumGame {
    /// payoff(row, col); rows are (u, v) pairs and minimize, columns are
    /// cheat isometries and maximize.
    Eigen::MatrixXd payoff;
    double value;
    std::vector<double> row_strategy;
    std::vector<double> col_strategy;
    /// min over rows of the column strategy's payoff
    double primal_value;
    /// max over columns against the row strategy
    double dual_value;
    double duality_gap() const { return dual_value - primal_value; }
};

/// max over column mixtures of min over rows, by the simplex method with
/// Bland's rule.
ZeroSumGame solve_zero_sum(const Eigen::MatrixXd& payoff);

/// q(ṽ|u,v,T) for every (u, v) and q̃(ṽ|v,T) for one cheat isometry.
struct StrategyTables {
    ConditionalDistribution q;
    ConditionalDistribution q_tilde;
};

StrategyTables strategy_tables(const TwoPartyProtocol& protocol, const CheatIsometry& t);

/// g = Σ q δ_{f(u,v), f(u,ṽ)} − Σ |q − q̃|, in [−2, 1].
double payoff(std::size_t u, std::size_t v, const StrategyTables& t, const ClassicalFunction& f);

/// Rows u·|V| + v, one column per strategy.
Eigen::MatrixXd payoff_matrix(const std::vector<StrategyTables>& strategies, const ClassicalFunction& f);

struct CombinedAttack {
    std::vector<double> weights;
    ConditionalDistribution Q;
    ConditionalDistribution Q_tilde;
    /// max over (u, v) of 1 − Σ Q δ_{f(u,v), f(u,ṽ)}
    double eps1;
    /// max over (u, v) of Σ_T p″(T) Σ |q − q̃|
    double eps2;
};

CombinedAttack combined_attack(const std::vector<double>& weights, const std::vector<StrategyTables>& strategies,
                               const ClassicalFunction& f);

struct Theorem2Check {
    std::size_t u0;
    double eps;
    /// min over (u, v) of Σ Q(ṽ|u0,v) δ_{f(u,v), f(u,ṽ)}
    double min_success;
    std::size_t worst_u, worst_v;
    bool pass;
};

Theorem2Check theorem2_check(const ConditionalDistribution& Q, const ClassicalFunction& f, std::size_t u0, double eps,
                             double slack = 1e-8);

struct RecoveryCheck {
    /// Q(v|u0, v) per v
    std::vector<double> recovery;
    double min_recovery;
    double threshold;
    bool pass;
};

/// Q(v|u0, v) ≥ 1 − 28ε for every v.
RecoveryCheck strengthen_eq(const ConditionalDistribution& Q, std::size_t u0, double eps, double slack = 1e-8);

/// 2^{-n} Σ_u δ_{IP(u,v), IP(u,ṽ)}: 1 when ṽ = v, ½ otherwise.
double ip_collision_factor(std::size_t n, std::size_t v, std::size_t vt);

/// Q(v|u0, v) ≥ 1 − 56ε for every v.  `implied` holds 2A_v − 1 with A_v the
/// u-averaged success, which equals Q(v|u0, v) by the collision identity.
struct IpRecoveryCheck {
    RecoveryCheck check;
    std::vector<double> averaged_success;
    std::vector<double> implied;
};

IpRecoveryCheck strengthen_ip(const ConditionalDistribution& Q, std::size_t u0, double eps, std::size_t n,
                              double slack = 1e-8);

struct Theorem2Config {
    /// Grid resolution; 0 uses the measured ε.
    double net_eps = 0.0;
    std::size_t max_strategies = 12;
    double slack = 1e-6;
};

struct NetPointRecord {
    std::vector<std::size_t> numerators;
    std::vector<double> p;
    double eps_corr;
    double eps_sec;
    double achieved_overlap;
    /// Σ p g(u, v, T_p)
    double lemma_value;
};

struct Theorem2Run {
    /// Largest of ε_corr and ε_sec over every distribution evaluated.
    double eps;
    double net_eps;
    std::size_t denominator;
    std::vector<NetPointRecord> points;
    ZeroSumGame game;
    CombinedAttack combined;
    std::vector<Theorem2Check> checks;
    /// Stopped because the best reply to the minimizing distribution was
    /// already a strategy, not because of max_strategies.
    bool converged;
    /// Every Σ p g(T_p) ≥ 1 − 12ε, and the game value ≥ 1 − 14ε.
    bool chain_pass;
    bool pass() const;
};

/// Strategies are added one at a time: solve the game over the current set,
/// round the minimizing distribution onto the grid, and build the cheat
/// isometry for that grid point, until the point repeats.
Theorem2Run run_theorem2(const TwoPartyProtocol& protocol, const ClassicalFunction& f,
                         const IdealAdversary& adversary, const Theorem2Config& config = {});

}  // namespace qlab
