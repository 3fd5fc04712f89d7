#include "qlab/game.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qlab/linalg.hpp"

namespace qlab {

// ---------------------------------------------------------------------------
// Grid over the simplex

std::size_t net_denominator(std::size_t w_size, double eps) {
    if (w_size == 0) throw InvalidArgument("net needs at least one outcome");
    if (!(eps > 0.0 && eps <= 1.0)) throw InvalidArgument("net resolution must lie in (0, 1]");
    const double n = std::ceil(static_cast<double>(w_size) / (2.0 * eps) - 1e-12);
    if (n > 1e9) throw InvalidArgument("net resolution too fine");
    return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

double net_size(std::size_t w_size, std::size_t denominator) {
    // C(N + w − 1, w − 1)
    double c = 1.0;
    for (std::size_t i = 1; i < w_size; ++i)
        c = c * static_cast<double>(denominator + i) / static_cast<double>(i);
    return std::round(c);
}

SimplexNet build_simplex_net(std::size_t w_size, double eps, std::size_t cap) {
    const auto n = net_denominator(w_size, eps);
    if (net_size(w_size, n) > static_cast<double>(cap))
        throw InvalidArgument("net of " + std::to_string(net_size(w_size, n)) + " points exceeds the cap of " +
                              std::to_string(cap));
    SimplexNet net{w_size, eps, n, {}};
    std::vector<std::size_t> k(w_size, 0);
    // Compositions of n into w_size parts in lexicographic order, largest first.
    auto rec = [&](auto&& self, std::size_t pos, std::size_t left) -> void {
        if (pos + 1 == w_size) {
            k[pos] = left;
            std::vector<double> p(w_size);
            for (std::size_t i = 0; i < w_size; ++i) p[i] = static_cast<double>(k[i]) / static_cast<double>(n);
            net.points.push_back(std::move(p));
            return;
        }
        for (std::size_t a = left + 1; a-- > 0;) {
            k[pos] = a;
            self(self, pos + 1, left - a);
        }
    };
    rec(rec, 0, n);
    return net;
}

std::vector<std::size_t> round_to_grid(const std::vector<double>& p, std::size_t denominator) {
    const auto w = p.size();
    std::vector<std::size_t> k(w);
    std::vector<double> frac(w);
    std::size_t used = 0;
    for (std::size_t i = 0; i < w; ++i) {
        const double x = std::max(0.0, p[i]) * static_cast<double>(denominator);
        k[i] = static_cast<std::size_t>(std::floor(x));
        frac[i] = x - static_cast<double>(k[i]);
        used += k[i];
    }
    if (used > denominator) throw InvalidArgument("round_to_grid: weights exceed one");
    std::vector<std::size_t> order(w);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t i = 0; used < denominator; ++i, ++used) ++k[order[i % w]];
    return k;
}

// ---------------------------------------------------------------------------
// Zero-sum games

namespace {

constexpr double kPivotTol = 1e-12;

// max 1ᵀz subject to A z ≤ 1, z ≥ 0, with A > 0 entrywise.  Returns z and
// the multipliers y of the constraints.
std::pair<Eigen::VectorXd, Eigen::VectorXd> solve_packing_lp(const Eigen::MatrixXd& a) {
    const auto m = a.rows();  // constraints
    const auto n = a.cols();  // variables
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, n + m + 1);
    t.leftCols(n) = a;
    t.block(0, n, m, m).setIdentity();
    t.col(n + m).setOnes();
    Eigen::VectorXd reduced = Eigen::VectorXd::Zero(n + m);
    reduced.head(n).setOnes();
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

    const std::size_t max_iter = 100000;
    for (std::size_t iter = 0;; ++iter) {
        if (iter == max_iter) throw NumericsFault("simplex did not terminate");
        Eigen::Index enter = -1;
        for (Eigen::Index j = 0; j < n + m; ++j)
            if (reduced(j) > kPivotTol) {
                enter = j;
                break;
            }
        if (enter < 0) break;
        Eigen::Index leave = -1;
        double best = 0;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (t(i, enter) <= kPivotTol) continue;
            const double ratio = t(i, n + m) / t(i, enter);
            if (leave < 0 || ratio < best - 1e-15 ||
                (ratio <= best + 1e-15 && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
                leave = i;
                best = ratio;
            }
        }
        if (leave < 0) throw NumericsFault("payoff LP is unbounded");
        t.row(leave) /= t(leave, enter);
        for (Eigen::Index i = 0; i < m; ++i)
            if (i != leave && t(i, enter) != 0.0) t.row(i) -= t(i, enter) * t.row(leave);
        reduced -= reduced(enter) * t.row(leave).head(n + m).transpose();
        basis[static_cast<std::size_t>(leave)] = enter;
    }
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < m; ++i)
        if (basis[static_cast<std::size_t>(i)] < n) z(basis[static_cast<std::size_t>(i)]) = t(i, n + m);
    Eigen::VectorXd y = (-reduced.tail(m)).cwiseMax(0.0);
    return {z, y};
}

std::vector<double> normalized(const Eigen::VectorXd& v) {
    const double s = v.sum();
    if (!(s > 0)) throw NumericsFault("degenerate game strategy");
    std::vector<double> out(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = std::max(0.0, v(i)) / s;
    return out;
}

}  // namespace

ZeroSumGame solve_zero_sum(const Eigen::MatrixXd& payoff) {
    if (payoff.rows() == 0 || payoff.cols() == 0) throw InvalidArgument("empty payoff matrix");
    if (!payoff.allFinite()) throw NumericsFault("payoff matrix has non-finite entries");
    // Shift so every entry is at least 1; the value shifts by the same amount.
    const double shift = 1.0 - payoff.minCoeff();
    const Eigen::MatrixXd m = payoff.array() + shift;
    // Row player: max 1ᵀz with mᵀz ≤ 1; its multipliers give the column mixture.
    const auto [z, y] = solve_packing_lp(m.transpose());

    ZeroSumGame g;
    g.payoff = payoff;
    g.row_strategy = normalized(z);
    g.col_strategy = normalized(y);
    g.value = 1.0 / z.sum() - shift;
    const Eigen::Map<const Eigen::VectorXd> x(g.col_strategy.data(), payoff.cols());
    const Eigen::Map<const Eigen::VectorXd> r(g.row_strategy.data(), payoff.rows());
    g.primal_value = (payoff * x).minCoeff();
    g.dual_value = (payoff.transpose() * r).maxCoeff();
    return g;
}

// ---------------------------------------------------------------------------
// Payoffs and mixtures

StrategyTables strategy_tables(const TwoPartyProtocol& protocol, const CheatIsometry& t) {
    // Conditioned on R the run does not depend on p, so one full-support
    // run gives every row.
    auto outcome = execute_attack(protocol, JointDistribution::uniform(protocol.u_size(), protocol.v_size()), t);
    return StrategyTables{std::move(outcome.q), t.q_tilde};
}

double payoff(std::size_t u, std::size_t v, const StrategyTables& t, const ClassicalFunction& f) {
    const auto& q = t.q.row(u * f.v_size() + v);
    const auto& qt = t.q_tilde.row(v);
    linalg::KahanSum success, defect;
    for (std::size_t vt = 0; vt < q.size(); ++vt) {
        if (f(u, v) == f(u, vt)) success.add(q[vt]);
        defect.add(std::abs(q[vt] - qt[vt]));
    }
    return success.value() - defect.value();
}

Eigen::MatrixXd payoff_matrix(const std::vector<StrategyTables>& strategies, const ClassicalFunction& f) {
    const auto rows = static_cast<Eigen::Index>(f.u_size() * f.v_size());
    Eigen::MatrixXd g(rows, static_cast<Eigen::Index>(strategies.size()));
    for (std::size_t c = 0; c < strategies.size(); ++c)
        for (std::size_t u = 0; u < f.u_size(); ++u)
            for (std::size_t v = 0; v < f.v_size(); ++v)
                g(static_cast<Eigen::Index>(u * f.v_size() + v), static_cast<Eigen::Index>(c)) =
                    payoff(u, v, strategies[c], f);
    return g;
}

CombinedAttack combined_attack(const std::vector<double>& weights, const std::vector<StrategyTables>& strategies,
                               const ClassicalFunction& f) {
    if (weights.size() != strategies.size() || strategies.empty())
        throw InvalidArgument("combined_attack: one weight per strategy required");
    const std::size_t nu = f.u_size(), nv = f.v_size();
    for (const auto& s : strategies)
        if (s.q.row_count() != nu * nv || s.q.outcome_size() != nv || s.q_tilde.row_count() != nv)
            throw InvalidArgument("combined_attack: strategy tables do not match the function");

    ConditionalDistribution Q(nu * nv, nv), Qt(nv, nv);
    double eps1 = 0, eps2 = 0;
    for (std::size_t v = 0; v < nv; ++v) {
        std::vector<double> row(nv, 0.0);
        for (std::size_t vt = 0; vt < nv; ++vt) {
            linalg::KahanSum s;
            for (std::size_t t = 0; t < strategies.size(); ++t) s.add(weights[t] * strategies[t].q_tilde(v, vt));
            row[vt] = s.value();
        }
        Qt.set_row(v, row);
    }
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t v = 0; v < nv; ++v) {
            const auto r = u * nv + v;
            std::vector<double> row(nv, 0.0);
            linalg::KahanSum slack2;
            for (std::size_t t = 0; t < strategies.size(); ++t) {
                const auto& q = strategies[t].q.row(r);
                const auto& qt = strategies[t].q_tilde.row(v);
                for (std::size_t vt = 0; vt < nv; ++vt) {
                    row[vt] += weights[t] * q[vt];
                    slack2.add(weights[t] * std::abs(q[vt] - qt[vt]));
                }
            }
            Q.set_row(r, row);
            linalg::KahanSum success;
            for (std::size_t vt = 0; vt < nv; ++vt)
                if (f(u, v) == f(u, vt)) success.add(Q(r, vt));
            eps1 = std::max(eps1, 1.0 - success.value());
            eps2 = std::max(eps2, slack2.value());
        }
    return CombinedAttack{weights, std::move(Q), std::move(Qt), eps1, eps2};
}

// ---------------------------------------------------------------------------
// Checks

Theorem2Check theorem2_check(const ConditionalDistribution& Q, const ClassicalFunction& f, std::size_t u0, double eps,
                             double slack) {
    const std::size_t nu = f.u_size(), nv = f.v_size();
    if (u0 >= nu) throw InvalidArgument("theorem2_check: u0 out of range");
    Theorem2Check out{u0, eps, 2.0, 0, 0, false};
    for (std::size_t v = 0; v < nv; ++v) {
        const auto& row = Q.row(u0 * nv + v);
        for (std::size_t u = 0; u < nu; ++u) {
            linalg::KahanSum s;
            for (std::size_t vt = 0; vt < nv; ++vt)
                if (f(u, v) == f(u, vt)) s.add(row[vt]);
            if (s.value() < out.min_success) {
                out.min_success = s.value();
                out.worst_u = u;
                out.worst_v = v;
            }
        }
    }
    out.pass = out.min_success >= 1.0 - 28.0 * eps - slack;
    return out;
}

namespace {

RecoveryCheck recovery(const ConditionalDistribution& Q, std::size_t u0, double threshold, double slack) {
    const std::size_t nv = Q.outcome_size();
    if ((u0 + 1) * nv > Q.row_count()) throw InvalidArgument("recovery check: u0 out of range");
    RecoveryCheck out{{}, 1.0, threshold, true};
    for (std::size_t v = 0; v < nv; ++v) {
        const double r = Q(u0 * nv + v, v);
        out.recovery.push_back(r);
        out.min_recovery = std::min(out.min_recovery, r);
    }
    out.pass = out.min_recovery >= threshold - slack;
    return out;
}

}  // namespace

RecoveryCheck strengthen_eq(const ConditionalDistribution& Q, std::size_t u0, double eps, double slack) {
    return recovery(Q, u0, 1.0 - 28.0 * eps, slack);
}

double ip_collision_factor(std::size_t n, std::size_t v, std::size_t vt) {
    if (v >> n || vt >> n) throw InvalidArgument("ip_collision_factor: input out of range");
    return v == vt ? 1.0 : 0.5;
}

IpRecoveryCheck strengthen_ip(const ConditionalDistribution& Q, std::size_t u0, double eps, std::size_t n,
                              double slack) {
    const std::size_t nv = std::size_t{1} << n;
    if (Q.outcome_size() != nv) throw InvalidArgument("strengthen_ip: table does not match n");
    IpRecoveryCheck out{recovery(Q, u0, 1.0 - 56.0 * eps, slack), {}, {}};
    for (std::size_t v = 0; v < nv; ++v) {
        linalg::KahanSum a;
        for (std::size_t vt = 0; vt < nv; ++vt) a.add(Q(u0 * nv + v, vt) * ip_collision_factor(n, v, vt));
        out.averaged_success.push_back(a.value());
        out.implied.push_back(2.0 * a.value() - 1.0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline

bool Theorem2Run::pass() const {
    if (!chain_pass || !converged || game.duality_gap() > 1e-9) return false;
    return std::all_of(checks.begin(), checks.end(), [](const Theorem2Check& c) { return c.pass; });
}

Theorem2Run run_theorem2(const TwoPartyProtocol& protocol, const ClassicalFunction& f,
                         const IdealAdversary& adversary, const Theorem2Config& config) {
    const std::size_t nu = f.u_size(), nv = f.v_size(), w = nu * nv;
    if (config.max_strategies == 0) throw InvalidArgument("max_strategies must be positive");

    // ε is a supremum over distributions; probe the uniform one and every
    // point mass, then every grid point the search visits.
    double eps = 0;
    auto probe = [&](const JointDistribution& p) {
        const double c = correctness_epsilon(protocol, f, p);
        const double s = security_epsilon(protocol, f, p, adversary);
        eps = std::max({eps, c, s});
        return std::pair{c, s};
    };
    probe(JointDistribution::uniform(nu, nv));
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t v = 0; v < nv; ++v) probe(JointDistribution::point(nu, nv, u, v));

    Theorem2Run run;
    run.net_eps = config.net_eps > 0 ? config.net_eps : std::max(eps, 1e-3);
    run.denominator = net_denominator(w, run.net_eps);

    std::vector<StrategyTables> strategies;
    auto add_point = [&](std::vector<std::size_t> k) {
        std::vector<double> weights(w);
        for (std::size_t i = 0; i < w; ++i) weights[i] = static_cast<double>(k[i]) / static_cast<double>(run.denominator);
        const JointDistribution p(nu, nv, weights);
        const auto [c, s] = probe(p);
        const auto t = construct_cheat_isometry(protocol, f, p, adversary);
        strategies.push_back(strategy_tables(protocol, t));
        linalg::KahanSum value;
        for (std::size_t u = 0; u < nu; ++u)
            for (std::size_t v = 0; v < nv; ++v)
                if (p(u, v) > 0) value.add(p(u, v) * payoff(u, v, strategies.back(), f));
        run.points.push_back(NetPointRecord{std::move(k), weights, c, s, t.achieved_overlap, value.value()});
    };

    add_point(round_to_grid(std::vector<double>(w, 1.0 / static_cast<double>(w)), run.denominator));
    run.converged = false;
    for (;;) {
        run.game = solve_zero_sum(payoff_matrix(strategies, f));
        const auto next = round_to_grid(run.game.row_strategy, run.denominator);
        const bool seen = std::any_of(run.points.begin(), run.points.end(),
                                      [&](const NetPointRecord& r) { return r.numerators == next; });
        if (seen) {
            run.converged = true;
            break;
        }
        if (strategies.size() >= config.max_strategies) break;
        add_point(next);
    }

    run.eps = eps;
    run.chain_pass = run.game.value >= 1.0 - 14.0 * eps - config.slack;
    for (const auto& r : run.points) run.chain_pass = run.chain_pass && r.lemma_value >= 1.0 - 12.0 * eps - config.slack;
    run.combined = combined_attack(run.game.col_strategy, strategies, f);
    for (std::size_t u0 = 0; u0 < nu; ++u0) run.checks.push_back(theorem2_check(run.combined.Q, f, u0, eps, config.slack));
    return run;
}

}  // namespace qlab
