#pragma once

// Finite-dimensional quantum states and channels over labeled registers.
//
// Index convention: a basis index of a RegisterSystem is the mixed-radix
// number whose digits are the register values, first register most
// significant.  Every operation that changes register layout returns a
// new object whose system records the resulting order.

#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qlab {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using RealVec = Eigen::VectorXd;

/// Tolerance for validating states, channels and isometries.
inline constexpr double kValidationTol = 1e-9;
/// Tolerance for derived numerical equalities.
inline constexpr double kDerivedTol = 1e-8;

/// Raised when inputs violate a documented precondition.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a computation produces a result that violates an invariant
/// which should hold for valid inputs (e.g. an LP reported infeasible).
class NumericsFault : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Register {
    std::string label;
    std::size_t dim = 1;

    bool operator==(const Register&) const = default;
};

class RegisterSystem {
public:
    RegisterSystem() = default;
    explicit RegisterSystem(std::vector<Register> registers);

    const std::vector<Register>& registers() const { return registers_; }
    std::size_t size() const { return registers_.size(); }
    std::size_t dim() const { return dim_; }

    bool contains(const std::string& label) const;
    std::size_t position(const std::string& label) const;
    const Register& at(const std::string& label) const;
    std::vector<std::string> labels() const;

    /// Registers named in `labels`, kept in this system's order.
    RegisterSystem subsystem(const std::vector<std::string>& labels) const;
    /// Registers named in `labels`, in the order given.
    RegisterSystem select(const std::vector<std::string>& labels) const;
    /// All registers not named in `labels`, in this system's order.
    RegisterSystem complement(const std::vector<std::string>& labels) const;
    /// Concatenation; throws on label collision.
    RegisterSystem concat(const RegisterSystem& other) const;

    /// Digits of a basis index, one per register.
    std::vector<std::size_t> digits(std::size_t index) const;
    std::size_t index(const std::vector<std::size_t>& digits) const;

    bool operator==(const RegisterSystem&) const = default;

private:
    std::vector<Register> registers_;
    std::size_t dim_ = 1;
};

/// For every basis index of `to`, the basis index of `from` holding the same
/// register values.  `to` must be a permutation of `from`.
std::vector<std::size_t> permutation_map(const RegisterSystem& from, const RegisterSystem& to);

class PureState {
public:
    PureState(RegisterSystem system, Vec amplitudes);

    /// Computational basis state with the given register values.
    static PureState basis(RegisterSystem system, const std::vector<std::size_t>& digits);

    const RegisterSystem& system() const { return system_; }
    const Vec& amplitudes() const { return amplitudes_; }

private:
    RegisterSystem system_;
    Vec amplitudes_;
};

/// Square operator on a register system.  No positivity or trace invariant;
/// used for linear-map arguments that need not be states.
struct Operator {
    RegisterSystem system;
    Mat matrix;

    Operator() = default;
    Operator(RegisterSystem sys, Mat m);
};

class DensityOperator {
public:
    /// Validates Hermiticity, unit trace and positivity within kValidationTol.
    DensityOperator(RegisterSystem system, Mat matrix);
    explicit DensityOperator(const PureState& psi);
    explicit DensityOperator(Operator op) : DensityOperator(std::move(op.system), std::move(op.matrix)) {}

    const RegisterSystem& system() const { return op_.system; }
    const Mat& matrix() const { return op_.matrix; }
    const Operator& op() const { return op_; }

private:
    struct Unchecked {};
    DensityOperator(Operator op, Unchecked) : op_(std::move(op)) {}
    friend DensityOperator assume_density(Operator op);

    Operator op_;
};

/// Wraps an operator known to be a state by construction; skips validation.
DensityOperator assume_density(Operator op);

/// Kraus-form channel.  Each Kraus operator maps input_system to output_system.
class QuantumChannel {
public:
    QuantumChannel(RegisterSystem input, RegisterSystem output, std::vector<Mat> kraus);

    static QuantumChannel isometry(RegisterSystem input, RegisterSystem output, Mat map);
    /// Skips the O(d³) isometry check; for maps that are isometric by
    /// construction (shape is still checked).
    static QuantumChannel trusted_isometry(RegisterSystem input, RegisterSystem output, Mat map);
    static QuantumChannel identity(const RegisterSystem& system);
    /// Identity map that renames registers; dims must agree pairwise.
    static QuantumChannel relabel(const RegisterSystem& input, const RegisterSystem& output);

    const RegisterSystem& input_system() const { return input_; }
    const RegisterSystem& output_system() const { return output_; }
    const std::vector<Mat>& kraus() const { return kraus_; }
    bool is_isometry() const { return kraus_.size() == 1; }

    /// Stinespring dilation: single isometry into output ⊗ env (env dim = #Kraus).
    QuantumChannel dilate(const std::string& env_label) const;

private:
    QuantumChannel() = default;

    RegisterSystem input_;
    RegisterSystem output_;
    std::vector<Mat> kraus_;
};

// ---------------------------------------------------------------------------
// Layout

PureState reorder(const PureState& psi, const std::vector<std::string>& order);
Operator reorder(const Operator& op, const std::vector<std::string>& order);
DensityOperator reorder(const DensityOperator& rho, const std::vector<std::string>& order);

PureState tensor(const PureState& a, const PureState& b);
Operator tensor(const Operator& a, const Operator& b);
DensityOperator tensor(const DensityOperator& a, const DensityOperator& b);

// ---------------------------------------------------------------------------
// Reductions and measures

Operator partial_trace(const Operator& op, const std::vector<std::string>& keep);
DensityOperator partial_trace(const DensityOperator& rho, const std::vector<std::string>& keep);
/// Reduced state of a pure state; the kept registers appear in system order.
DensityOperator partial_trace(const PureState& psi, const std::vector<std::string>& keep);

/// Purification with environment register `env_label`.  env_dim = 0 uses
/// dim(rho); env_dim must be ≥ rank(rho).  Eigenvectors are taken in
/// decreasing eigenvalue order so a pure input yields |ψ⟩⊗|0⟩.
PureState purify(const DensityOperator& rho, const std::string& env_label, std::size_t env_dim = 0);
/// Purification with env_dim equal to the numerical rank of rho.
PureState purify_minimal(const DensityOperator& rho, const std::string& env_label);

double fidelity(const DensityOperator& rho, const DensityOperator& sigma);
double purified_distance(const DensityOperator& rho, const DensityOperator& sigma);
/// The same for the reduced states of two pure states on `keep`, computed
/// from the purifications; cost scales with the traced-out dimensions.
double fidelity(const PureState& phi, const PureState& psi, const std::vector<std::string>& keep);
double purified_distance(const PureState& phi, const PureState& psi, const std::vector<std::string>& keep);
/// Classical fidelity Σ√(p q) and total variation ½Σ|p−q|.
double classical_fidelity(const std::vector<double>& p, const std::vector<double>& q);
double total_variation(const std::vector<double>& p, const std::vector<double>& q);

// ---------------------------------------------------------------------------
// Channels

/// Applies ch to the registers ch.input_system() of op; result registers are
/// the untouched registers (in order) followed by ch.output_system().
Operator apply_channel(const QuantumChannel& ch, const Operator& op);
DensityOperator apply_channel(const QuantumChannel& ch, const DensityOperator& rho);
/// Same layout rule for an isometric channel acting on a pure state.
PureState apply_isometry(const QuantumChannel& ch, const PureState& psi);

/// Computational-basis dephasing of the listed registers.
DensityOperator dephase(const DensityOperator& rho, const std::vector<std::string>& targets);

// ---------------------------------------------------------------------------
// Measurement

template <class State>
struct MeasurementOutcome {
    std::vector<std::size_t> outcome;
    double probability;
    State post_state;
};

std::vector<MeasurementOutcome<PureState>> measure_computational(
    const PureState& psi, const std::vector<std::string>& targets);
std::vector<MeasurementOutcome<DensityOperator>> measure_computational(
    const DensityOperator& rho, const std::vector<std::string>& targets);

/// Joint computational-basis distribution of `targets` (in the order given),
/// indexed by the mixed-radix index over those registers.
std::vector<double> marginal_distribution(const PureState& psi, const std::vector<std::string>& targets);
std::vector<double> marginal_distribution(const DensityOperator& rho, const std::vector<std::string>& targets);

// ---------------------------------------------------------------------------
// Uhlmann

struct UhlmannResult {
    /// Isometry env_phi → env_psi (plus padding register when present).
    QuantumChannel map;
    /// |⟨ψ_padded|(T ⊗ id)|φ⟩|.
    double overlap;
    /// Ancilla appended to psi's environment when dim(env_psi) < dim(env_phi).
    std::optional<Register> padding;
};

/// Isometry on phi's environment maximizing the overlap with psi.  The
/// non-environment registers of phi and psi must coincide as label sets with
/// equal dimensions.
UhlmannResult uhlmann_isometry(const PureState& phi, const PureState& psi,
                               const std::vector<std::string>& env_phi,
                               const std::vector<std::string>& env_psi,
                               const std::string& pad_label = "Pad");

/// |⟨a|b⟩| after aligning b's register order to a's.
double overlap(const PureState& a, const PureState& b);

}  // namespace qlab
