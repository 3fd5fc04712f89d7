#include <gtest/gtest.h>

#include <tuple>

#include <cmath>

#include "qlab/qcore.hpp"
#include "test_util.hpp"

using namespace qlab;
using namespace qlab::testing;

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

RegisterSystem qubits(std::initializer_list<std::string> labels) {
    std::vector<Register> regs;
    for (const auto& l : labels) regs.push_back({l, 2});
    return RegisterSystem(regs);
}

PureState bell(const std::string& a, const std::string& b) {
    Vec v = Vec::Zero(4);
    v(0) = kInvSqrt2;
    v(3) = kInvSqrt2;
    return PureState(qubits({a, b}), v);
}

PureState plus(const std::string& a) {
    Vec v(2);
    v << kInvSqrt2, kInvSqrt2;
    return PureState(single(a, 2), v);
}

DensityOperator proj(const PureState& psi) { return DensityOperator(psi); }

}  // namespace

// ---------- registers ----------

TEST(RegisterSystem, RejectsDuplicateLabelsAndZeroDims) {
    EXPECT_THROW(RegisterSystem({{"A", 2}, {"A", 3}}), InvalidArgument);
    EXPECT_THROW(RegisterSystem({{"A", 0}}), InvalidArgument);
}

TEST(RegisterSystem, DigitsRoundTripFirstRegisterMostSignificant) {
    RegisterSystem sys({{"A", 2}, {"B", 3}, {"C", 4}});
    EXPECT_EQ(sys.dim(), 24u);
    EXPECT_EQ(sys.index({1, 2, 3}), 1u * 12 + 2 * 4 + 3);
    for (std::size_t i = 0; i < sys.dim(); ++i) EXPECT_EQ(sys.index(sys.digits(i)), i);
    EXPECT_EQ(sys.subsystem({"C", "A"}).labels(), (std::vector<std::string>{"A", "C"}));
    EXPECT_EQ(sys.select({"C", "A"}).labels(), (std::vector<std::string>{"C", "A"}));
}

// ---------- tensor ----------

TEST(Tensor, BasisStatesConcatenate) {
    const auto s = tensor(PureState::basis(single("A", 2), {0}), PureState::basis(single("B", 2), {1}));
    EXPECT_EQ(s.system().labels(), (std::vector<std::string>{"A", "B"}));
    EXPECT_NEAR(std::abs(s.amplitudes()(1)), 1.0, 1e-15);
}

TEST(Tensor, InverseOfPartialTraceAndNormMultiplicative) {
    std::mt19937_64 rng(1);
    const auto rho = random_density(rng, RegisterSystem({{"A", 3}}), 2);
    const auto joint = tensor(rho, proj(PureState::basis(single("B", 2), {0})));
    EXPECT_LT(max_abs_diff(partial_trace(joint, {"A"}).matrix(), rho.matrix()), 1e-14);

    const auto a = random_pure(rng, RegisterSystem({{"A", 3}}));
    const auto b = random_pure(rng, RegisterSystem({{"B", 5}}));
    EXPECT_NEAR(tensor(a, b).amplitudes().norm(), 1.0, 1e-12);
}

TEST(Tensor, LabelCollisionThrows) {
    EXPECT_THROW(tensor(plus("A"), plus("A")), InvalidArgument);
}

// ---------- partial trace ----------

TEST(PartialTrace, BellReducesToMaximallyMixed) {
    const auto r = partial_trace(proj(bell("A", "B")), {"A"});
    EXPECT_LT(max_abs_diff(r.matrix(), 0.5 * Mat::Identity(2, 2)), 1e-15);
    const auto rp = partial_trace(bell("A", "B"), {"B"});
    EXPECT_LT(max_abs_diff(rp.matrix(), 0.5 * Mat::Identity(2, 2)), 1e-15);
}

TEST(PartialTrace, ProductStateAndIdentityCase) {
    std::mt19937_64 rng(2);
    const auto a = random_density(rng, RegisterSystem({{"A", 3}}), 3);
    const auto b = random_density(rng, RegisterSystem({{"B", 2}}), 1);
    const auto ab = tensor(a, b);
    EXPECT_LT(max_abs_diff(partial_trace(ab, {"A"}).matrix(), a.matrix()), 1e-14);
    EXPECT_LT(max_abs_diff(partial_trace(ab, {"A", "B"}).matrix(), ab.matrix()), 1e-15);
}

TEST(PartialTrace, MatchesDigitEnumeration) {
    std::mt19937_64 rng(3);
    RegisterSystem sys({{"A", 2}, {"B", 3}, {"C", 2}, {"D", 3}});
    const auto rho = random_density(rng, sys, 5);
    for (const auto& keep : std::vector<std::vector<std::string>>{{"A"}, {"B", "D"}, {"C", "A"}, {"A", "B", "D"}}) {
        const auto got = partial_trace(rho, keep);
        EXPECT_LT(max_abs_diff(got.matrix(), brute_partial_trace(rho.op(), keep)), 1e-14);
        EXPECT_NEAR(got.matrix().trace().real(), 1.0, 1e-12);
    }
    const auto psi = random_pure(rng, sys);
    EXPECT_LT(max_abs_diff(partial_trace(psi, {"B", "C"}).matrix(), brute_partial_trace(proj(psi).op(), {"B", "C"})),
              1e-14);
}

TEST(PartialTrace, UnknownLabelThrows) {
    EXPECT_THROW(partial_trace(proj(bell("A", "B")), {"Z"}), InvalidArgument);
}

// ---------- purify ----------

TEST(Purify, MaximallyMixedQubitGivesMaximallyEntangledState) {
    const DensityOperator mixed(single("A", 2), 0.5 * Mat::Identity(2, 2));
    const auto psi = purify(mixed, "E");
    EXPECT_LT(max_abs_diff(partial_trace(psi, {"A"}).matrix(), mixed.matrix()), 1e-15);
    EXPECT_LT(max_abs_diff(partial_trace(psi, {"E"}).matrix(), 0.5 * Mat::Identity(2, 2)), 1e-15);
}

TEST(Purify, PureInputGivesProductWithEnvZero) {
    std::mt19937_64 rng(4);
    const auto phi = random_pure(rng, single("A", 3));
    const auto psi = purify(proj(phi), "E");
    EXPECT_NEAR(overlap(psi, tensor(phi, PureState::basis(single("E", 3), {0}))), 1.0, 1e-12);
    const auto minimal = purify_minimal(proj(phi), "E");
    EXPECT_EQ(minimal.system().at("E").dim, 1u);
}

TEST(Purify, RandomRankThreeRoundTrip) {
    std::mt19937_64 rng(5);
    const auto rho = random_density(rng, RegisterSystem({{"A", 4}}), 3);
    const auto psi = purify(rho, "E");
    EXPECT_LT(max_abs_diff(partial_trace(psi, {"A"}).matrix(), rho.matrix()), 1e-9);
    const auto minimal = purify_minimal(rho, "E");
    EXPECT_EQ(minimal.system().at("E").dim, 3u);
    EXPECT_LT(max_abs_diff(partial_trace(minimal, {"A"}).matrix(), rho.matrix()), 1e-9);
    EXPECT_THROW(purify(rho, "E", 2), InvalidArgument);
}

// ---------- fidelity & purified distance ----------

TEST(Fidelity, AnalyticCases) {
    const auto zero = proj(PureState::basis(single("A", 2), {0}));
    const auto one = proj(PureState::basis(single("A", 2), {1}));
    const auto p = proj(plus("A"));
    EXPECT_NEAR(fidelity(zero, zero), 1.0, 1e-12);
    EXPECT_NEAR(fidelity(zero, one), 0.0, 1e-12);
    EXPECT_NEAR(fidelity(zero, p), kInvSqrt2, 1e-12);
    EXPECT_NEAR(purified_distance(zero, zero), 0.0, 1e-9);
    EXPECT_NEAR(purified_distance(zero, p), kInvSqrt2, 1e-12);
}

TEST(Fidelity, PureStatesMatchOverlapAndSymmetry) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const RegisterSystem sys({{"A", 2}, {"B", 3}});
        const auto a = random_pure(rng, sys);
        const auto b = random_pure(rng, sys);
        EXPECT_NEAR(fidelity(proj(a), proj(b)), std::abs(a.amplitudes().dot(b.amplitudes())), 1e-7);
        const auto r = random_density(rng, sys, 3);
        const auto s = random_density(rng, sys, 2);
        EXPECT_NEAR(fidelity(r, s), fidelity(s, r), 1e-9);
    }
}

TEST(Fidelity, ReducedStatesOfPurificationsMatchDensityRoute) {
    std::mt19937_64 rng(61);
    // (kept dim, env dims) chosen to exercise both evaluation routes
    const std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> shapes{
        {6, 2, 5}, {6, 8, 1}, {2, 16, 16}, {4, 4, 4}};
    for (const auto& [dk, e1, e2] : shapes)
        for (int trial = 0; trial < 5; ++trial) {
            const auto phi = random_pure(rng, RegisterSystem({{"A", dk}, {"E", e1}}));
            const auto psi = random_pure(rng, RegisterSystem({{"F", e2}, {"A", dk}}));
            const auto rho = partial_trace(phi, {"A"});
            const auto sigma = partial_trace(psi, {"A"});
            EXPECT_NEAR(fidelity(phi, psi, {"A"}), fidelity(rho, sigma), 1e-9);
            EXPECT_NEAR(purified_distance(phi, psi, {"A"}), purified_distance(rho, sigma), 1e-8);
            // same reduced state, different purification
            const auto scramble = QuantumChannel::isometry(single("E", e1), single("G", e1),
                                                           haar_isometry(rng, static_cast<Eigen::Index>(e1),
                                                                         static_cast<Eigen::Index>(e1)));
            EXPECT_NEAR(purified_distance(phi, apply_isometry(scramble, phi), {"A"}), 0.0, 1e-9);
        }
    const auto a = random_pure(rng, RegisterSystem({{"A", 2}, {"E", 2}}));
    const auto b = random_pure(rng, RegisterSystem({{"A", 3}, {"E", 2}}));
    EXPECT_THROW(fidelity(a, b, {"A"}), InvalidArgument);
    EXPECT_THROW(fidelity(a, a, {"Z"}), InvalidArgument);
}

TEST(Fidelity, DimensionMismatchThrows) {
    const auto a = proj(PureState::basis(single("A", 2), {0}));
    const auto b = proj(PureState::basis(single("A", 3), {0}));
    EXPECT_THROW(fidelity(a, b), InvalidArgument);
}

TEST(PurifiedDistance, BoundsMeasuredTotalVariationAndTriangle) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> dim(2, 8);
    for (int trial = 0; trial < 50; ++trial) {
        const RegisterSystem sys({{"A", static_cast<std::size_t>(dim(rng))}});
        const auto r = random_density(rng, sys, 2);
        const auto s = random_density(rng, sys, 3);
        const auto t = random_density(rng, sys, 1);
        const double tv = total_variation(marginal_distribution(r, {"A"}), marginal_distribution(s, {"A"}));
        EXPECT_GE(purified_distance(r, s) + 1e-12, tv);
        EXPECT_LE(purified_distance(r, t), purified_distance(r, s) + purified_distance(s, t) + 1e-8);
    }
}

TEST(PurifiedDistance, MonotoneUnderPartialTraceAndChannels) {
    std::mt19937_64 rng(8);
    const RegisterSystem sys({{"A", 2}, {"B", 4}});
    for (int trial = 0; trial < 30; ++trial) {
        const auto r = random_density(rng, sys, 3);
        const auto s = random_density(rng, sys, 2);
        const double before = purified_distance(r, s);
        EXPECT_LE(purified_distance(partial_trace(r, {"A"}), partial_trace(s, {"A"})), before + 1e-8);
        const auto ch = random_channel(rng, sys.select({"B"}), single("C", 3), 3);
        EXPECT_LE(purified_distance(apply_channel(ch, r), apply_channel(ch, s)), before + 1e-8);
    }
}

// ---------- channels ----------

TEST(Channel, RejectsNonTracePreservingKraus) {
    Mat k = Mat::Identity(2, 2) * 0.5;
    EXPECT_THROW(QuantumChannel(single("A", 2), single("A", 2), {k}), InvalidArgument);
}

TEST(Channel, IdentityDepolarizingAndReset) {
    std::mt19937_64 rng(9);
    const auto rho = random_density(rng, single("A", 2), 2);
    EXPECT_LT(max_abs_diff(apply_channel(QuantumChannel::identity(single("A", 2)), rho).matrix(), rho.matrix()), 1e-15);

    Mat x(2, 2), y(2, 2), z(2, 2);
    x << 0, 1, 1, 0;
    y << 0, cplx(0, -1), cplx(0, 1), 0;
    z << 1, 0, 0, -1;
    const QuantumChannel depol(single("A", 2), single("A", 2),
                               {0.5 * Mat::Identity(2, 2), 0.5 * x, 0.5 * y, 0.5 * z});
    EXPECT_LT(max_abs_diff(apply_channel(depol, rho).matrix(), 0.5 * Mat::Identity(2, 2)), 1e-15);

    Mat k0 = Mat::Zero(2, 2), k1 = Mat::Zero(2, 2);
    k0(0, 0) = 1;
    k1(0, 1) = 1;
    const QuantumChannel reset(single("A", 2), single("A", 2), {k0, k1});
    const auto out = apply_channel(reset, proj(PureState::basis(single("A", 2), {1})));
    EXPECT_NEAR(out.matrix()(0, 0).real(), 1.0, 1e-15);
}

TEST(Channel, MatchesKroneckerReferenceAndLeavesOtherRegisters) {
    std::mt19937_64 rng(10);
    const RegisterSystem sys({{"A", 2}, {"B", 3}, {"C", 2}});
    const auto rho = random_density(rng, sys, 4);
    const auto ch = random_channel(rng, RegisterSystem({{"C", 2}, {"A", 2}}), RegisterSystem({{"D", 3}}), 2);
    const auto out = apply_channel(ch, rho);
    EXPECT_EQ(out.system().labels(), (std::vector<std::string>{"B", "D"}));

    // Reference: reorder to B,C,A and apply I_B ⊗ K as full matrices.
    const auto ordered = reorder(rho, {"B", "C", "A"});
    Mat ref = Mat::Zero(9, 9);
    for (const auto& k : ch.kraus()) {
        Mat big = Mat::Zero(9, 12);
        for (Eigen::Index b = 0; b < 3; ++b) big.block(b * 3, b * 4, 3, 4) = k;
        ref += big * ordered.matrix() * big.adjoint();
    }
    EXPECT_LT(max_abs_diff(out.matrix(), ref), 1e-13);
    // Untouched register B keeps its marginal.
    EXPECT_LT(max_abs_diff(partial_trace(out, {"B"}).matrix(), partial_trace(rho, {"B"}).matrix()), 1e-13);
}

TEST(Channel, SystemMismatchThrows) {
    const auto rho = proj(PureState::basis(single("A", 2), {0}));
    EXPECT_THROW(apply_channel(QuantumChannel::identity(single("A", 3)), rho), InvalidArgument);
    EXPECT_THROW(apply_channel(QuantumChannel::identity(single("Z", 2)), rho), InvalidArgument);
}

TEST(Channel, DilationReproducesChannel) {
    std::mt19937_64 rng(11);
    const auto rho = random_density(rng, RegisterSystem({{"A", 3}, {"B", 2}}), 3);
    const auto ch = random_channel(rng, single("A", 3), single("A", 2), 4);
    const auto iso = ch.dilate("E");
    const auto via_iso = partial_trace(apply_channel(iso, rho), {"B", "A"});
    EXPECT_LT(max_abs_diff(reorder(via_iso, {"B", "A"}).matrix(), apply_channel(ch, rho).matrix()), 1e-13);
}

TEST(Channel, IsometryOnPureStateMatchesDensityRoute) {
    std::mt19937_64 rng(12);
    const auto psi = random_pure(rng, RegisterSystem({{"A", 2}, {"B", 3}}));
    const auto iso = QuantumChannel::isometry(single("A", 2), RegisterSystem({{"C", 2}, {"D", 2}}), haar_isometry(rng, 4, 2));
    const auto out = apply_isometry(iso, psi);
    EXPECT_LT(max_abs_diff(proj(out).matrix(), apply_channel(iso, proj(psi)).matrix()), 1e-13);
}

TEST(Channel, DephaseKillsOffDiagonalsOfTargets) {
    const auto d = dephase(proj(bell("A", "B")), {"A"});
    EXPECT_NEAR(std::abs(d.matrix()(0, 3)), 0.0, 1e-15);
    EXPECT_NEAR(d.matrix()(0, 0).real(), 0.5, 1e-15);
}

// ---------- measurement ----------

TEST(Measure, PlusStateIsUniform) {
    const auto outcomes = measure_computational(plus("A"), {"A"});
    ASSERT_EQ(outcomes.size(), 2u);
    EXPECT_NEAR(outcomes[0].probability, 0.5, 1e-15);
    EXPECT_NEAR(outcomes[1].probability, 0.5, 1e-15);
}

TEST(Measure, BasisStateDeterministicAndZeroOutcomesOmitted) {
    const auto s = PureState::basis(qubits({"A", "B"}), {0, 1});
    const auto outcomes = measure_computational(s, {"A", "B"});
    ASSERT_EQ(outcomes.size(), 1u);
    EXPECT_EQ(outcomes[0].outcome, (std::vector<std::size_t>{0, 1}));
    EXPECT_NEAR(outcomes[0].probability, 1.0, 1e-15);
}

TEST(Measure, BellPostStatesCollapsePartner) {
    for (const auto& outcomes : {measure_computational(proj(bell("A", "B")), {"A"})}) {
        ASSERT_EQ(outcomes.size(), 2u);
        for (const auto& o : outcomes) {
            EXPECT_NEAR(o.probability, 0.5, 1e-15);
            const auto partner = partial_trace(o.post_state, {"B"});
            EXPECT_NEAR(partner.matrix()(static_cast<Eigen::Index>(o.outcome[0]), static_cast<Eigen::Index>(o.outcome[0])).real(),
                        1.0, 1e-15);
        }
    }
    const auto pure_outcomes = measure_computational(bell("A", "B"), {"B"});
    ASSERT_EQ(pure_outcomes.size(), 2u);
    EXPECT_NEAR(pure_outcomes[1].post_state.amplitudes()(3).real(), 1.0, 1e-15);
    EXPECT_THROW(measure_computational(plus("A"), {"Q"}), InvalidArgument);
}

// ---------- Uhlmann ----------

TEST(Uhlmann, EqualStatesGiveIdentity) {
    const auto b = bell("A", "E");
    const auto res = uhlmann_isometry(b, b, {"E"}, {"E"});
    EXPECT_NEAR(res.overlap, 1.0, 1e-12);
    EXPECT_LT(max_abs_diff(res.map.kraus().front(), Mat::Identity(2, 2)), 1e-12);
}

TEST(Uhlmann, RelabeledPurificationGivesBitFlip) {
    Vec v = Vec::Zero(4);
    v(1) = kInvSqrt2;
    v(2) = kInvSqrt2;
    const PureState psi(qubits({"A", "E"}), v);
    const auto res = uhlmann_isometry(bell("A", "E"), psi, {"E"}, {"E"});
    EXPECT_NEAR(res.overlap, 1.0, 1e-12);
    Mat x(2, 2);
    x << 0, 1, 1, 0;
    EXPECT_LT(max_abs_diff(res.map.kraus().front(), x), 1e-12);
    EXPECT_NEAR(overlap(apply_isometry(res.map, bell("A", "E")), psi), 1.0, 1e-12);
}

TEST(Uhlmann, RandomPurificationsAchieveFidelity) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const auto rho = random_density(rng, single("S", 4), 3);
        const auto sigma = random_density(rng, single("S", 4), 4);
        const auto phi = purify(rho, "E");
        // Independent purification of sigma: scramble the environment with a random unitary.
        const auto scramble = QuantumChannel::isometry(single("E", 4), single("F", 4), haar_isometry(rng, 4, 4));
        const auto psi = apply_isometry(scramble, purify(sigma, "E"));
        const auto res = uhlmann_isometry(phi, psi, {"E"}, {"F"});
        EXPECT_NEAR(res.overlap, fidelity(rho, sigma), 1e-8);
        const Mat& t = res.map.kraus().front();
        EXPECT_LT(max_abs_diff(t.adjoint() * t, Mat::Identity(4, 4)), 1e-9);
        EXPECT_NEAR(overlap(apply_isometry(res.map, phi), psi), res.overlap, 1e-10);
    }
}

TEST(Uhlmann, PadsSmallerTargetEnvironment) {
    std::mt19937_64 rng(14);
    const auto rho = random_density(rng, single("S", 3), 2);
    const auto phi = purify(rho, "E", 6);
    const auto sigma = random_density(rng, single("S", 3), 2);
    const auto psi = purify(sigma, "P", 2);
    const auto res = uhlmann_isometry(phi, psi, {"E"}, {"P"});
    ASSERT_TRUE(res.padding.has_value());
    EXPECT_EQ(res.padding->dim, 3u);
    const Mat& t = res.map.kraus().front();
    EXPECT_EQ(t.rows(), 6);
    EXPECT_LT(max_abs_diff(t.adjoint() * t, Mat::Identity(6, 6)), 1e-9);
    EXPECT_NEAR(res.overlap, fidelity(rho, sigma), 1e-8);
    const auto padded = tensor(psi, PureState::basis(RegisterSystem({*res.padding}), {0}));
    EXPECT_NEAR(overlap(apply_isometry(res.map, phi), padded), res.overlap, 1e-10);
}

TEST(Uhlmann, NoHaarIsometryBeatsReturnedMap) {
    std::mt19937_64 rng(15);
    const auto rho = random_density(rng, single("S", 3), 3);
    const auto sigma = random_density(rng, single("S", 3), 2);
    const auto phi = purify(rho, "E");
    const auto psi = purify(sigma, "P", 4);
    const auto res = uhlmann_isometry(phi, psi, {"E"}, {"P"});
    for (int k = 0; k < 100; ++k) {
        const auto trial = QuantumChannel::isometry(single("E", 3), single("P", 4), haar_isometry(rng, 4, 3));
        EXPECT_LE(overlap(apply_isometry(trial, phi), psi), res.overlap + 1e-8);
    }
}

TEST(Uhlmann, SharedSystemMismatchThrows) {
    const auto a = bell("A", "E");
    const auto b = bell("B", "E");
    EXPECT_THROW(uhlmann_isometry(a, b, {"E"}, {"E"}), InvalidArgument);
}

// ---------- density validation ----------

TEST(DensityOperator, ValidatesInvariants) {
    Mat m = Mat::Identity(2, 2);
    EXPECT_THROW(DensityOperator(single("A", 2), m), InvalidArgument);  // trace 2
    Mat neg(2, 2);
    neg << 1.5, 0, 0, -0.5;
    EXPECT_THROW(DensityOperator(single("A", 2), neg), InvalidArgument);
    Mat nh(2, 2);
    nh << 0.5, 0.1, 0.0, 0.5;
    EXPECT_THROW(DensityOperator(single("A", 2), nh), InvalidArgument);
}
