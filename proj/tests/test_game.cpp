#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "qlab/funcs.hpp"
#include "qlab/game.hpp"
#include "test_util.hpp"

using namespace qlab;
using namespace qlab::testing;

namespace {

std::vector<double> random_simplex_point(std::mt19937_64& rng, std::size_t w) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> p(w);
    double s = 0;
    for (auto& x : p) s += (x = e(rng));
    for (auto& x : p) x /= s;
    return p;
}

double tv(const std::vector<double>& a, const std::vector<double>& b) { return total_variation(a, b); }

// Value of a game with two columns: the maximum of the lower envelope of
// the row lines, attained at an endpoint or a crossing.
double two_column_value(const Eigen::MatrixXd& g) {
    std::vector<double> xs{0.0, 1.0};
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = i + 1; j < g.rows(); ++j) {
            const double di = g(i, 0) - g(i, 1), dj = g(j, 0) - g(j, 1);
            if (std::abs(di - dj) < 1e-15) continue;
            const double x = (g(j, 1) - g(i, 1)) / (di - dj);
            if (x > 0 && x < 1) xs.push_back(x);
        }
    double best = -1e300;
    for (double x : xs) {
        double lo = 1e300;
        for (Eigen::Index i = 0; i < g.rows(); ++i) lo = std::min(lo, x * g(i, 0) + (1 - x) * g(i, 1));
        best = std::max(best, lo);
    }
    return best;
}

ConditionalDistribution delta_table(std::size_t rows, std::size_t outcomes,
                                    const std::function<std::size_t(std::size_t)>& pick) {
    ConditionalDistribution c(rows, outcomes);
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<double> w(outcomes, 0.0);
        w[pick(r)] = 1.0;
        c.set_row(r, w);
    }
    return c;
}

ConditionalDistribution random_table(std::mt19937_64& rng, std::size_t rows, std::size_t outcomes) {
    ConditionalDistribution c(rows, outcomes);
    for (std::size_t r = 0; r < rows; ++r) c.set_row(r, random_simplex_point(rng, outcomes));
    return c;
}

}  // namespace

// ---------- simplex grid ----------

TEST(SimplexNet, SmallCases) {
    const auto net = build_simplex_net(2, 0.5);
    ASSERT_EQ(net.points.size(), 3u);
    EXPECT_EQ(net.points[0], (std::vector<double>{1.0, 0.0}));
    EXPECT_EQ(net.points[1], (std::vector<double>{0.5, 0.5}));
    EXPECT_EQ(net.points[2], (std::vector<double>{0.0, 1.0}));
    const auto one = build_simplex_net(1, 0.1);
    ASSERT_EQ(one.points.size(), 1u);
    EXPECT_EQ(one.points[0], std::vector<double>{1.0});
    EXPECT_THROW(build_simplex_net(4, 0.0), InvalidArgument);
    EXPECT_THROW(build_simplex_net(16, 0.05), InvalidArgument);  // far beyond the cap
    EXPECT_DOUBLE_EQ(net_size(4, 8), static_cast<double>(build_simplex_net(4, 0.25).points.size()));
}

TEST(SimplexNet, EveryPointIsCoveredByBruteForceSearch) {
    std::mt19937_64 rng(41);
    const auto net = build_simplex_net(4, 0.25);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto p = random_simplex_point(rng, 4);
        double best = 1;
        for (const auto& q : net.points) best = std::min(best, tv(p, q));
        EXPECT_LE(best, 0.25 + 1e-12);
    }
}

TEST(SimplexNet, RoundingStaysOnTheGridWithinResolution) {
    std::mt19937_64 rng(42);
    for (std::size_t w : {2, 4, 16})
        for (double eps : {0.3, 0.1, 0.02}) {
            const auto n = net_denominator(w, eps);
            for (int trial = 0; trial < 10000 / 9; ++trial) {
                const auto p = random_simplex_point(rng, w);
                const auto k = round_to_grid(p, n);
                std::size_t total = 0;
                std::vector<double> q(w);
                for (std::size_t i = 0; i < w; ++i) {
                    total += k[i];
                    q[i] = static_cast<double>(k[i]) / static_cast<double>(n);
                }
                EXPECT_EQ(total, n);
                EXPECT_LE(tv(p, q), eps + 1e-12);
            }
        }
}

// ---------- zero-sum solve ----------

TEST(ZeroSum, ClassicGames) {
    Eigen::MatrixXd pennies(2, 2);
    pennies << 1, -1, -1, 1;
    const auto g = solve_zero_sum(pennies);
    EXPECT_NEAR(g.value, 0.0, 1e-12);
    EXPECT_NEAR(g.col_strategy[0], 0.5, 1e-12);
    EXPECT_NEAR(g.row_strategy[0], 0.5, 1e-12);

    Eigen::MatrixXd dominant(2, 1);
    dominant << 1, 1;
    EXPECT_NEAR(solve_zero_sum(dominant).value, 1.0, 1e-12);

    Eigen::MatrixXd rps(3, 3);
    rps << 0, 1, -1, -1, 0, 1, 1, -1, 0;
    const auto r = solve_zero_sum(rps);
    EXPECT_NEAR(r.value, 0.0, 1e-12);
    for (double x : r.col_strategy) EXPECT_NEAR(x, 1.0 / 3, 1e-12);
    EXPECT_LE(std::abs(r.duality_gap()), 1e-9);
}

TEST(ZeroSum, TwoColumnGamesMatchLowerEnvelope) {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index rows = 1 + trial % 16;
        Eigen::MatrixXd g(rows, 2);
        for (Eigen::Index i = 0; i < rows; ++i) g(i, 0) = u(rng), g(i, 1) = u(rng);
        const auto s = solve_zero_sum(g);
        EXPECT_NEAR(s.value, two_column_value(g), 1e-10);
        EXPECT_LE(std::abs(s.duality_gap()), 1e-9);
    }
}

TEST(ZeroSum, RandomGamesCertifyTheirValue) {
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index rows = 1 + trial % 16, cols = 1 + (trial / 3) % 12;
        Eigen::MatrixXd g(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) g(i, j) = u(rng);
        const auto s = solve_zero_sum(g);
        EXPECT_LE(std::abs(s.duality_gap()), 1e-9);
        EXPECT_NEAR(s.primal_value, s.value, 1e-9);
        double sr = 0, sc = 0;
        for (double x : s.row_strategy) {
            sr += x;
            EXPECT_GE(x, 0.0);
        }
        for (double x : s.col_strategy) {
            sc += x;
            EXPECT_GE(x, 0.0);
        }
        EXPECT_NEAR(sr, 1.0, 1e-12);
        EXPECT_NEAR(sc, 1.0, 1e-12);
    }
    EXPECT_THROW(solve_zero_sum(Eigen::MatrixXd(0, 0)), InvalidArgument);
}

// ---------- payoff and mixtures ----------

TEST(Payoff, RangeAndSpecialCases) {
    const auto f = make_function(FunctionKind::EQ, 1);
    const auto exact = StrategyTables{delta_table(4, 2, [](std::size_t r) { return r % 2; }),
                                      delta_table(2, 2, [](std::size_t v) { return v; })};
    for (std::size_t u = 0; u < 2; ++u)
        for (std::size_t v = 0; v < 2; ++v) EXPECT_DOUBLE_EQ(payoff(u, v, exact, f), 1.0);

    // Guess always wrong but identical to q̃: only the success term counts.
    const auto wrong = delta_table(4, 2, [](std::size_t r) { return 1 - r % 2; });
    const auto same = StrategyTables{wrong, delta_table(2, 2, [](std::size_t v) { return 1 - v; })};
    EXPECT_DOUBLE_EQ(payoff(0, 0, same, f), 0.0);

    // Wrong guess with disjoint supports: the ℓ1 term reaches 2.
    const auto apart = StrategyTables{wrong, delta_table(2, 2, [](std::size_t v) { return v; })};
    EXPECT_DOUBLE_EQ(payoff(0, 0, apart, f), -2.0);

    std::mt19937_64 rng(45);
    for (int trial = 0; trial < 100; ++trial) {
        const StrategyTables t{random_table(rng, 4, 2), random_table(rng, 2, 2)};
        const auto g = payoff_matrix({t}, f);
        EXPECT_GE(g.minCoeff(), -2.0 - 1e-12);
        EXPECT_LE(g.maxCoeff(), 1.0 + 1e-12);
    }
}

TEST(Combined, MixturesAreExactConvexCombinations) {
    std::mt19937_64 rng(46);
    const auto f = make_function(FunctionKind::EQ, 2);
    const StrategyTables a{random_table(rng, 16, 4), random_table(rng, 4, 4)};
    const StrategyTables b{random_table(rng, 16, 4), random_table(rng, 4, 4)};

    const auto single = combined_attack({1.0}, {a}, f);
    const auto doubled = combined_attack({0.5, 0.5}, {a, a}, f);
    const auto mixed = combined_attack({0.3, 0.7}, {a, b}, f);
    for (std::size_t r = 0; r < 16; ++r) {
        double total = 0;
        for (std::size_t vt = 0; vt < 4; ++vt) {
            EXPECT_NEAR(single.Q(r, vt), a.q(r, vt), 1e-15);
            EXPECT_NEAR(doubled.Q(r, vt), a.q(r, vt), 1e-15);
            EXPECT_NEAR(mixed.Q(r, vt), 0.3 * a.q(r, vt) + 0.7 * b.q(r, vt), 1e-12);
            total += mixed.Q(r, vt);
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
    EXPECT_GE(mixed.eps1, 0.0);
    EXPECT_GE(mixed.eps2, 0.0);
    EXPECT_THROW(combined_attack({1.0}, {a, b}, f), InvalidArgument);
}

// ---------- bound checks ----------

TEST(Theorem2Check, PerfectAndFabricatedTables) {
    const auto f = make_function(FunctionKind::EQ, 2);
    const auto exact = delta_table(16, 4, [](std::size_t r) { return r % 4; });
    for (std::size_t u0 = 0; u0 < 4; ++u0) {
        const auto c = theorem2_check(exact, f, u0, 0.0);
        EXPECT_DOUBLE_EQ(c.min_success, 1.0);
        EXPECT_TRUE(c.pass);
    }
    // Alice always guesses v + 1: fails whenever u = v.
    const auto shifted = delta_table(16, 4, [](std::size_t r) { return (r + 1) % 4; });
    const auto bad = theorem2_check(shifted, f, 0, 0.01);
    EXPECT_FALSE(bad.pass);
    EXPECT_DOUBLE_EQ(bad.min_success, 0.0);
    EXPECT_EQ(bad.worst_u, bad.worst_v);
}

TEST(Strengthen, EqRecoveryIsTheDiagonalOfTheGeneralCheck) {
    std::mt19937_64 rng(47);
    const auto f = make_function(FunctionKind::EQ, 2);
    for (int trial = 0; trial < 20; ++trial) {
        const auto Q = random_table(rng, 16, 4);
        const auto eq = strengthen_eq(Q, 1, 0.01);
        for (std::size_t v = 0; v < 4; ++v) {
            // success at u = v counts only ṽ = v
            double s = 0;
            for (std::size_t vt = 0; vt < 4; ++vt)
                if (f(v, v) == f(v, vt)) s += Q(1 * 4 + v, vt);
            EXPECT_NEAR(eq.recovery[v], s, 1e-15);
        }
    }
    const auto exact = delta_table(16, 4, [](std::size_t r) { return r % 4; });
    EXPECT_TRUE(strengthen_eq(exact, 0, 0.0).pass);
}

TEST(Strengthen, IpCollisionIdentityByBruteForce) {
    for (std::size_t n = 1; n <= 3; ++n) {
        const auto ip = make_function(FunctionKind::IP, n);
        const std::size_t m = std::size_t{1} << n;
        for (std::size_t v = 0; v < m; ++v)
            for (std::size_t vt = 0; vt < m; ++vt) {
                std::size_t agree = 0;
                for (std::size_t u = 0; u < m; ++u) agree += ip(u, v) == ip(u, vt);
                EXPECT_DOUBLE_EQ(static_cast<double>(agree) / static_cast<double>(m), ip_collision_factor(n, v, vt));
            }
    }
}

TEST(Strengthen, IpImpliedRecoveryEqualsDiagonal) {
    std::mt19937_64 rng(48);
    for (int trial = 0; trial < 20; ++trial) {
        const auto Q = random_table(rng, 16, 4);
        const auto ip = strengthen_ip(Q, 2, 0.01, 2);
        for (std::size_t v = 0; v < 4; ++v) EXPECT_NEAR(ip.implied[v], ip.check.recovery[v], 1e-12);
    }
    const auto exact = delta_table(16, 4, [](std::size_t r) { return r % 4; });
    const auto perfect = strengthen_ip(exact, 0, 0.0, 2);
    EXPECT_TRUE(perfect.check.pass);
    EXPECT_DOUBLE_EQ(perfect.check.min_recovery, 1.0);
}

// ---------- full pipeline ----------

TEST(Pipeline, PerfectRevealGivesValueOne) {
    const auto fx = classical_reveal_protocol(make_function(FunctionKind::EQ, 1));
    const auto run = run_theorem2(fx.protocol, fx.function, fx.ideal_adversary);
    EXPECT_NEAR(run.eps, 0.0, 1e-9);
    EXPECT_NEAR(run.game.value, 1.0, 1e-9);
    EXPECT_TRUE(run.converged);
    EXPECT_TRUE(run.pass());
    for (const auto& c : run.checks) EXPECT_NEAR(c.min_success, 1.0, 1e-9);
}

TEST(Pipeline, NoisyRevealMeetsTheChainAndTheBound) {
    const auto base = classical_reveal_protocol(make_function(FunctionKind::IP, 1));
    const auto fx = depolarize_fixture(base, 0.02);
    const auto run = run_theorem2(fx.protocol, fx.function, fx.ideal_adversary);
    EXPECT_GT(run.eps, 0.0);
    EXPECT_LE(std::abs(run.game.duality_gap()), 1e-9);
    EXPECT_TRUE(run.chain_pass);
    EXPECT_TRUE(run.pass());
    // 1 − 12ε ≤ Σ p g(T_p) for every grid point visited
    for (const auto& r : run.points) EXPECT_GE(r.lemma_value, 1 - 12 * run.eps - 1e-6);
    // the mixture is what the game prescribes
    double s = 0;
    for (double w : run.combined.weights) s += w;
    EXPECT_NEAR(s, 1.0, 1e-12);
}
