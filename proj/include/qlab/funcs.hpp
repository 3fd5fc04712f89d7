#pragma once

// Concrete functions, protocols and simulators.
//
// Bit strings are integers with the first bit most significant.  The
// OT-like function takes u = (s0 << n) | s1 and v = b and outputs
// b·2^n + s_b to both parties.

#include <optional>
#include <string>
#include <vector>

#include "qlab/proto.hpp"

namespace qlab {

enum class FunctionKind { EQ, IP, DISJ, OT_LIKE, CONST };

FunctionKind parse_function_kind(const std::string& name);
std::string to_string(FunctionKind kind);

/// Largest n accepted by make_function.
inline constexpr std::size_t kMaxFunctionBits = 4;

ClassicalFunction make_function(FunctionKind kind, std::size_t n);

struct Fixture {
    std::string id;
    ClassicalFunction function;
    TwoPartyProtocol protocol;
    IdealAdversary ideal_adversary;
    std::optional<double> noise;
    /// Values the fixture is built to have under every input distribution;
    /// absent where only a measured value makes sense (noisy fixtures).
    std::optional<double> declared_eps_corr;
    std::optional<double> declared_eps_sec;
    std::string notes;
};

/// Bob sends v; Alice answers with f(u, v) and keeps a copy.  The simulator
/// holds v in K and rebuilds Bob's registers V, Yc, Y from the answer.
Fixture classical_reveal_protocol(const ClassicalFunction& f);

/// Bob sends b; Alice replies with s_b.  Both output (b, s_b).  n ≤ 2.
Fixture appendix_protocol(std::size_t n);

/// Every message register passes through a depolarizing channel of rate
/// delta, applied by Alice (before she sends, or after she receives).
/// delta = 0 returns the base fixture.
Fixture depolarize_fixture(const Fixture& base, double delta);

/// Weyl-operator Kraus form of ρ ↦ (1−δ)ρ + δ·I/d on one register.
QuantumChannel depolarizing_channel(const std::string& label, std::size_t d, double delta);

/// Reveal protocol for DISJ on n bits with Bob's input wrapper: when
/// |v| > n/2 he flips ⌊√n⌋ of v's one-bits, chosen uniformly (kept
/// coherently in a flip record), before taking part.  n ≤ 2.
Fixture disj_perturbed_fixture(std::size_t n);

/// Exact enumeration of the DISJ wrapper's effect on correctness.
struct DisjCorrectnessReport {
    std::size_t n;
    std::size_t flips;
    /// max over (u, v) of Pr[DISJ(u, v′) ≠ DISJ(u, v)]
    double worst_error;
    /// the same averaged over uniform (u, v)
    double mean_error;
    /// purified distance between honest and ideal output under uniform inputs
    double uniform_distance;
};

DisjCorrectnessReport disj_correctness_enumeration(std::size_t n);

/// All ⌊√n⌋-subsets of v's one-bits, as flip masks; empty unless |v| > n/2.
std::vector<std::size_t> disj_flip_masks(std::size_t n, std::size_t v);

struct TwoCopiesReport {
    /// TV distance between real and ideal outputs with the reference dephased.
    double tv_without_R;
    /// Purified distance with the coherent reference kept.
    double distance_with_R;
};

/// The appendix measurement attack against the two-copies simulator, n = 1.
/// With hadamard = false the attacker measures computationally for both b.
TwoCopiesReport two_copies_simulator_check(std::size_t n, bool hadamard = true);

struct CatalogEntry {
    std::string id;
    std::string description;
};

std::vector<CatalogEntry> fixture_catalog();

/// Builds a catalog fixture by id (see fixture_catalog()).
Fixture make_fixture(const std::string& id);

}  // namespace qlab
