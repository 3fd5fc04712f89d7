#pragma once

// Two-party protocols for classical functions: honest and purified
// execution, the ideal functionality and ideal-world runs, and the
// correctness / security distances.
//
// Register names are fixed across the library:
//   R   reference holding |u v⟩ (value u·|V| + v)
//   U V Alice's and Bob's inputs
//   X Y Alice's and Bob's outputs
//   Xc Yc coherent copies of X and Y (deferred output measurement)
//   Vt  Bob's input to the functionality; also its extra output in F_aug
//   Yt  Bob's output from the functionality

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qlab/qcore.hpp"

namespace qlab {

namespace labels {
inline const std::string R = "R";
inline const std::string U = "U";
inline const std::string V = "V";
inline const std::string X = "X";
inline const std::string Y = "Y";
inline const std::string Xc = "Xc";
inline const std::string Yc = "Yc";
inline const std::string Vt = "Vt";
inline const std::string Yt = "Yt";
}  // namespace labels

/// Total function on {0..u_size-1} × {0..v_size-1} with values in
/// {0..output_size-1}.  An optional second table gives Bob a different output.
class ClassicalFunction {
public:
    ClassicalFunction(std::string name, std::size_t u_size, std::size_t v_size, std::size_t output_size,
                      std::vector<std::size_t> table, std::optional<std::vector<std::size_t>> bob_table = std::nullopt);

    const std::string& name() const { return name_; }
    std::size_t u_size() const { return u_size_; }
    std::size_t v_size() const { return v_size_; }
    std::size_t output_size() const { return output_size_; }

    std::size_t operator()(std::size_t u, std::size_t v) const { return table_.at(u * v_size_ + v); }
    std::size_t bob(std::size_t u, std::size_t v) const;
    bool has_bob_table() const { return bob_table_.has_value(); }

    /// Same function with the parties exchanged: h(v, u) = bob(u, v) for the
    /// new first party, and f(u, v) for the new second party.
    ClassicalFunction swapped() const;

private:
    std::string name_;
    std::size_t u_size_, v_size_, output_size_;
    std::vector<std::size_t> table_;
    std::optional<std::vector<std::size_t>> bob_table_;
};

/// p(u, v), stored row-major (u·v_size + v).
class JointDistribution {
public:
    JointDistribution(std::size_t u_size, std::size_t v_size, std::vector<double> weights);

    static JointDistribution uniform(std::size_t u_size, std::size_t v_size);
    static JointDistribution point(std::size_t u_size, std::size_t v_size, std::size_t u, std::size_t v);

    std::size_t u_size() const { return u_size_; }
    std::size_t v_size() const { return v_size_; }
    double operator()(std::size_t u, std::size_t v) const { return weights_.at(u * v_size_ + v); }
    const std::vector<double>& weights() const { return weights_; }

    JointDistribution swapped() const;

private:
    std::size_t u_size_, v_size_;
    std::vector<double> weights_;
};

enum class Party { Alice, Bob };

inline Party other(Party p) { return p == Party::Alice ? Party::Bob : Party::Alice; }

/// One protocol step: the acting party applies `op` to registers it holds,
/// then hands the registers in `send` to the other party.  A channel with
/// several Kraus operators is run as its Stinespring isometry in purified
/// execution; the environment register `env_label` stays with the actor.
struct Round {
    Party party;
    QuantumChannel op;
    std::vector<std::string> send;
    std::string env_label;
};

/// Alice starts with U and her ancillas, Bob with V and his ancillas; all
/// ancillas start in |0⟩.  After the last round Alice must hold X and Bob Y.
class TwoPartyProtocol {
public:
    TwoPartyProtocol(std::size_t u_size, std::size_t v_size, RegisterSystem alice_ancillas,
                     RegisterSystem bob_ancillas, std::vector<Round> rounds);

    std::size_t u_size() const { return u_size_; }
    std::size_t v_size() const { return v_size_; }
    const RegisterSystem& alice_ancillas() const { return alice_ancillas_; }
    const RegisterSystem& bob_ancillas() const { return bob_ancillas_; }
    const std::vector<Round>& rounds() const { return rounds_; }
    std::size_t x_size() const { return x_size_; }
    std::size_t y_size() const { return y_size_; }

    /// Registers each party holds at the end, in acquisition order.
    const std::vector<std::string>& alice_final() const { return alice_final_; }
    const std::vector<std::string>& bob_final() const { return bob_final_; }

    /// Role swap: Bob becomes the first party.  U↔V, X↔Y and
    /// Xc↔Yc are exchanged in every round.
    TwoPartyProtocol swapped() const;

private:
    std::size_t u_size_, v_size_;
    RegisterSystem alice_ancillas_, bob_ancillas_;
    std::vector<Round> rounds_;
    std::size_t x_size_ = 0, y_size_ = 0;
    std::vector<std::string> alice_final_, bob_final_;
};

/// Ideal-world Bob: pre maps V → Vt ⊗ K…, post maps K… ⊗ Yt → Y′.
struct IdealAdversary {
    QuantumChannel pre;
    QuantumChannel post;

    /// Checks the register contract against the input and output sizes.
    void validate(std::size_t v_size, std::size_t y_size) const;

    /// Forwards V to the functionality and its answer to Y.
    static IdealAdversary forwarding(std::size_t v_size, std::size_t y_size);
};

/// Σ √p(u,v) |uv⟩_R |u⟩_U |v⟩_V.
PureState input_state(const JointDistribution& p);

/// Kraus form of F (or F_aug) from registers u_label, v_label to
/// X, Yt (and Vt when augmented).
QuantumChannel functionality_channel(const ClassicalFunction& f, bool augmented,
                                     const std::string& u_label = labels::U,
                                     const std::string& v_label = labels::Vt);

/// F applied to registers U, Vt of rho; outputs X, Yt after the untouched registers.
DensityOperator apply_ideal_functionality(const ClassicalFunction& f, const DensityOperator& rho);
/// F_aug: as above plus Vt holding the measured v.
DensityOperator apply_augmented_functionality(const ClassicalFunction& f, const DensityOperator& rho);

/// Purification of the ideal-world output: the Stinespring isometries of
/// Λ¹, F(_aug) and Λ² applied to the purified input.  Registers are R, X,
/// (Vt), the outputs of adversary.post, then env_label holding every
/// dilation environment.
PureState run_ideal_purified(const ClassicalFunction& f, const JointDistribution& p,
                             const std::optional<IdealAdversary>& adversary, bool augmented,
                             const std::string& env_label = "P");

/// id_R ⊗ [Λ² ∘ F(_aug) ∘ Λ¹] on the purified input.  Registers are R, X,
/// (Vt), then the outputs of adversary.post.  Without an adversary the
/// forwarding one is used, so the result lives on R, X, (Vt), Y.
DensityOperator run_ideal(const ClassicalFunction& f, const JointDistribution& p,
                          const std::optional<IdealAdversary>& adversary, bool augmented);

/// Honest execution with measured outputs, on R, X, Y.
DensityOperator run_honest(const TwoPartyProtocol& protocol, const JointDistribution& p);

struct PurifiedRun {
    PureState phi;
    /// X′₁: every register Alice ends with except X, with Xc and her environments.
    std::vector<std::string> alice_purification;
    /// Y′₁: likewise for Bob.  Bob's dishonest register is Y′ = Y′₁ Y.
    std::vector<std::string> bob_purification;

    std::vector<std::string> bob_dishonest() const;
};

/// Both parties honest but purified, outputs copied coherently into Xc, Yc.
PurifiedRun run_purified(const TwoPartyProtocol& protocol, const JointDistribution& p);

/// C([id ⊗ π](ρ_UVR), [id ⊗ F](ρ_UVR)).
double correctness_epsilon(const TwoPartyProtocol& protocol, const ClassicalFunction& f, const JointDistribution& p);

/// Distance between the real state on R, X, Y′ (Bob honest-but-purified)
/// and the ideal state produced by `adversary`, traced over Vt.
double security_epsilon(const TwoPartyProtocol& protocol, const ClassicalFunction& f, const JointDistribution& p,
                        const IdealAdversary& adversary);

/// Security against Alice, via the role-swapped protocol.
double security_epsilon_alice(const TwoPartyProtocol& protocol, const ClassicalFunction& f,
                              const JointDistribution& p, const IdealAdversary& adversary_for_swapped);

using DigitMap = std::function<std::vector<std::size_t>(const std::vector<std::size_t>&)>;

/// Isometry |a⟩ → |fn(a)⟩ on basis digits; fn must be injective.
QuantumChannel classical_isometry(const RegisterSystem& in, const RegisterSystem& out, const DigitMap& fn);

/// |x⟩ → |x⟩|x⟩ on a register of dimension d.
QuantumChannel copy_channel(const std::string& source, const std::string& target, std::size_t d);

}  // namespace qlab
