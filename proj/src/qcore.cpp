#include "qlab/qcore.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "qlab/linalg.hpp"

namespace qlab {

namespace {

/// For every basis index of `sys`, the mixed-radix index over `targets`.
std::vector<std::size_t> target_keys(const RegisterSystem& sys, const std::vector<std::string>& targets) {
    std::vector<std::size_t> weight(sys.size(), 0);
    std::size_t w = 1;
    for (auto it = targets.rbegin(); it != targets.rend(); ++it) {
        const auto pos = sys.position(*it);
        weight[pos] = w;
        w *= sys.registers()[pos].dim;
    }
    std::vector<std::size_t> keys(sys.dim(), 0);
    std::vector<std::size_t> digit(sys.size(), 0);
    std::size_t key = 0;
    for (std::size_t i = 0; i < sys.dim(); ++i) {
        keys[i] = key;
        // odometer increment, last register fastest
        for (std::size_t r = sys.size(); r-- > 0;) {
            if (++digit[r] < sys.registers()[r].dim) {
                key += weight[r];
                break;
            }
            key -= weight[r] * (digit[r] - 1);
            digit[r] = 0;
        }
    }
    return keys;
}

void require_same_labels(const RegisterSystem& a, const RegisterSystem& b, const char* what) {
    if (a.size() != b.size()) throw InvalidArgument(std::string(what) + ": register sets differ");
    for (const auto& r : a.registers()) {
        if (!b.contains(r.label) || b.at(r.label).dim != r.dim)
            throw InvalidArgument(std::string(what) + ": register '" + r.label + "' mismatch");
    }
}

std::vector<std::string> ordered_targets(const RegisterSystem& sys, const std::vector<std::string>& targets) {
    std::set<std::string> seen;
    for (const auto& t : targets) {
        if (!sys.contains(t)) throw InvalidArgument("unknown register '" + t + "'");
        if (!seen.insert(t).second) throw InvalidArgument("duplicate register '" + t + "'");
    }
    return targets;
}

}  // namespace

// ---------------------------------------------------------------------------
// RegisterSystem

RegisterSystem::RegisterSystem(std::vector<Register> registers) : registers_(std::move(registers)) {
    std::unordered_set<std::string> seen;
    for (const auto& r : registers_) {
        if (r.label.empty()) throw InvalidArgument("register label must be non-empty");
        if (r.dim == 0) throw InvalidArgument("register '" + r.label + "' has zero dimension");
        if (!seen.insert(r.label).second) throw InvalidArgument("duplicate register label '" + r.label + "'");
        dim_ *= r.dim;
    }
}

bool RegisterSystem::contains(const std::string& label) const {
    return std::any_of(registers_.begin(), registers_.end(), [&](const Register& r) { return r.label == label; });
}

std::size_t RegisterSystem::position(const std::string& label) const {
    for (std::size_t i = 0; i < registers_.size(); ++i)
        if (registers_[i].label == label) return i;
    throw InvalidArgument("unknown register '" + label + "'");
}

const Register& RegisterSystem::at(const std::string& label) const { return registers_[position(label)]; }

std::vector<std::string> RegisterSystem::labels() const {
    std::vector<std::string> out;
    out.reserve(registers_.size());
    for (const auto& r : registers_) out.push_back(r.label);
    return out;
}

RegisterSystem RegisterSystem::subsystem(const std::vector<std::string>& labels) const {
    for (const auto& l : labels) (void)position(l);
    std::vector<Register> out;
    for (const auto& r : registers_)
        if (std::find(labels.begin(), labels.end(), r.label) != labels.end()) out.push_back(r);
    return RegisterSystem(std::move(out));
}

RegisterSystem RegisterSystem::select(const std::vector<std::string>& labels) const {
    std::vector<Register> out;
    out.reserve(labels.size());
    for (const auto& l : labels) out.push_back(at(l));
    return RegisterSystem(std::move(out));
}

RegisterSystem RegisterSystem::complement(const std::vector<std::string>& labels) const {
    for (const auto& l : labels) (void)position(l);
    std::vector<Register> out;
    for (const auto& r : registers_)
        if (std::find(labels.begin(), labels.end(), r.label) == labels.end()) out.push_back(r);
    return RegisterSystem(std::move(out));
}

RegisterSystem RegisterSystem::concat(const RegisterSystem& other) const {
    std::vector<Register> out = registers_;
    for (const auto& r : other.registers_) {
        if (contains(r.label)) throw InvalidArgument("register label collision '" + r.label + "'");
        out.push_back(r);
    }
    return RegisterSystem(std::move(out));
}

std::vector<std::size_t> RegisterSystem::digits(std::size_t index) const {
    std::vector<std::size_t> out(registers_.size());
    for (std::size_t r = registers_.size(); r-- > 0;) {
        out[r] = index % registers_[r].dim;
        index /= registers_[r].dim;
    }
    return out;
}

std::size_t RegisterSystem::index(const std::vector<std::size_t>& digits) const {
    if (digits.size() != registers_.size()) throw InvalidArgument("digit count does not match register count");
    std::size_t idx = 0;
    for (std::size_t r = 0; r < registers_.size(); ++r) {
        if (digits[r] >= registers_[r].dim) throw InvalidArgument("digit out of range for '" + registers_[r].label + "'");
        idx = idx * registers_[r].dim + digits[r];
    }
    return idx;
}

std::vector<std::size_t> permutation_map(const RegisterSystem& from, const RegisterSystem& to) {
    require_same_labels(from, to, "permutation_map");
    // from-index of a to-basis element is the key over from's order
    // evaluated on to's digits.
    return target_keys(to, from.labels());
}

// ---------------------------------------------------------------------------
// States

PureState::PureState(RegisterSystem system, Vec amplitudes)
    : system_(std::move(system)), amplitudes_(std::move(amplitudes)) {
    if (static_cast<std::size_t>(amplitudes_.size()) != system_.dim())
        throw InvalidArgument("amplitude count does not match system dimension");
    if (std::abs(amplitudes_.norm() - 1.0) > kValidationTol) throw InvalidArgument("state is not normalized");
}

PureState PureState::basis(RegisterSystem system, const std::vector<std::size_t>& digits) {
    Vec v = Vec::Zero(static_cast<Eigen::Index>(system.dim()));
    v(static_cast<Eigen::Index>(system.index(digits))) = 1.0;
    return PureState(std::move(system), std::move(v));
}

Operator::Operator(RegisterSystem sys, Mat m) : system(std::move(sys)), matrix(std::move(m)) {
    const auto d = static_cast<Eigen::Index>(system.dim());
    if (matrix.rows() != d || matrix.cols() != d) throw InvalidArgument("operator shape does not match system dimension");
}

DensityOperator::DensityOperator(RegisterSystem system, Mat matrix) : op_(std::move(system), std::move(matrix)) {
    if (linalg::hermiticity_defect(op_.matrix) > kValidationTol) throw InvalidArgument("density operator is not Hermitian");
    if (std::abs(op_.matrix.trace() - 1.0) > kValidationTol) throw InvalidArgument("density operator trace is not 1");
    const auto eig = linalg::hermitian_eigen(0.5 * (op_.matrix + op_.matrix.adjoint()));
    if (eig.values.size() > 0 && eig.values.minCoeff() < -kValidationTol)
        throw InvalidArgument("density operator has a negative eigenvalue");
}

DensityOperator::DensityOperator(const PureState& psi)
    : op_(psi.system(), psi.amplitudes() * psi.amplitudes().adjoint()) {}

DensityOperator assume_density(Operator op) { return DensityOperator(std::move(op), DensityOperator::Unchecked{}); }

// ---------------------------------------------------------------------------
// Channels

QuantumChannel::QuantumChannel(RegisterSystem input, RegisterSystem output, std::vector<Mat> kraus)
    : input_(std::move(input)), output_(std::move(output)), kraus_(std::move(kraus)) {
    if (kraus_.empty()) throw InvalidArgument("channel needs at least one Kraus operator");
    const auto di = static_cast<Eigen::Index>(input_.dim());
    const auto dout = static_cast<Eigen::Index>(output_.dim());
    Mat sum = Mat::Zero(di, di);
    for (const auto& k : kraus_) {
        if (k.rows() != dout || k.cols() != di) throw InvalidArgument("Kraus operator shape mismatch");
        sum.noalias() += k.adjoint() * k;
    }
    if ((sum - Mat::Identity(di, di)).cwiseAbs().maxCoeff() > kValidationTol)
        throw InvalidArgument("channel is not trace preserving");
}

QuantumChannel QuantumChannel::isometry(RegisterSystem input, RegisterSystem output, Mat map) {
    return QuantumChannel(std::move(input), std::move(output), std::vector<Mat>{std::move(map)});
}

QuantumChannel QuantumChannel::trusted_isometry(RegisterSystem input, RegisterSystem output, Mat map) {
    QuantumChannel ch;
    ch.input_ = std::move(input);
    ch.output_ = std::move(output);
    if (map.rows() != static_cast<Eigen::Index>(ch.output_.dim()) || map.cols() != static_cast<Eigen::Index>(ch.input_.dim()))
        throw InvalidArgument("isometry shape mismatch");
    ch.kraus_.push_back(std::move(map));
    return ch;
}

QuantumChannel QuantumChannel::identity(const RegisterSystem& system) {
    const auto d = static_cast<Eigen::Index>(system.dim());
    return isometry(system, system, Mat::Identity(d, d));
}

QuantumChannel QuantumChannel::relabel(const RegisterSystem& input, const RegisterSystem& output) {
    if (input.size() != output.size()) throw InvalidArgument("relabel: register counts differ");
    for (std::size_t i = 0; i < input.size(); ++i)
        if (input.registers()[i].dim != output.registers()[i].dim) throw InvalidArgument("relabel: dimension mismatch");
    const auto d = static_cast<Eigen::Index>(input.dim());
    return isometry(input, output, Mat::Identity(d, d));
}

QuantumChannel QuantumChannel::dilate(const std::string& env_label) const {
    const auto nk = static_cast<Eigen::Index>(kraus_.size());
    const auto dout = static_cast<Eigen::Index>(output_.dim());
    const auto di = static_cast<Eigen::Index>(input_.dim());
    Mat v = Mat::Zero(dout * nk, di);
    for (Eigen::Index k = 0; k < nk; ++k)
        for (Eigen::Index o = 0; o < dout; ++o) v.row(o * nk + k) = kraus_[static_cast<std::size_t>(k)].row(o);
    return isometry(input_, output_.concat(RegisterSystem({{env_label, kraus_.size()}})), std::move(v));
}

// ---------------------------------------------------------------------------
// Layout

PureState reorder(const PureState& psi, const std::vector<std::string>& order) {
    const auto target = psi.system().select(order);
    if (target.size() != psi.system().size()) throw InvalidArgument("reorder: order must list every register");
    if (target == psi.system()) return psi;
    const auto map = permutation_map(psi.system(), target);
    Vec out(psi.amplitudes().size());
    for (std::size_t i = 0; i < map.size(); ++i) out(static_cast<Eigen::Index>(i)) = psi.amplitudes()(static_cast<Eigen::Index>(map[i]));
    return PureState(target, std::move(out));
}

Operator reorder(const Operator& op, const std::vector<std::string>& order) {
    const auto target = op.system.select(order);
    if (target.size() != op.system.size()) throw InvalidArgument("reorder: order must list every register");
    if (target == op.system) return op;
    const auto map = permutation_map(op.system, target);
    const auto d = static_cast<Eigen::Index>(map.size());
    Mat out(d, d);
    for (Eigen::Index c = 0; c < d; ++c)
        for (Eigen::Index r = 0; r < d; ++r) out(r, c) = op.matrix(static_cast<Eigen::Index>(map[r]), static_cast<Eigen::Index>(map[c]));
    return Operator(target, std::move(out));
}

DensityOperator reorder(const DensityOperator& rho, const std::vector<std::string>& order) {
    return assume_density(reorder(rho.op(), order));
}

PureState tensor(const PureState& a, const PureState& b) {
    auto sys = a.system().concat(b.system());
    const auto db = b.amplitudes().size();
    Vec out(a.amplitudes().size() * db);
    for (Eigen::Index i = 0; i < a.amplitudes().size(); ++i) out.segment(i * db, db) = a.amplitudes()(i) * b.amplitudes();
    return PureState(std::move(sys), std::move(out));
}

Operator tensor(const Operator& a, const Operator& b) {
    auto sys = a.system.concat(b.system);
    const auto da = a.matrix.rows();
    const auto db = b.matrix.rows();
    Mat out(da * db, da * db);
    for (Eigen::Index j = 0; j < da; ++j)
        for (Eigen::Index i = 0; i < da; ++i) out.block(i * db, j * db, db, db) = a.matrix(i, j) * b.matrix;
    return Operator(std::move(sys), std::move(out));
}

DensityOperator tensor(const DensityOperator& a, const DensityOperator& b) {
    return assume_density(tensor(a.op(), b.op()));
}

// ---------------------------------------------------------------------------
// Reductions

Operator partial_trace(const Operator& op, const std::vector<std::string>& keep) {
    ordered_targets(op.system, keep);
    const auto kept = op.system.subsystem(keep);
    if (kept.size() == op.system.size()) return op;
    const auto traced = op.system.complement(keep);
    auto order = kept.labels();
    for (const auto& l : traced.labels()) order.push_back(l);
    const auto full = reorder(op, order);

    const auto k = static_cast<Eigen::Index>(kept.dim());
    const auto e = static_cast<Eigen::Index>(traced.dim());
    const auto d = k * e;
    Mat out = Mat::Zero(k, k);
    using StridedMap = Eigen::Map<const Mat, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;
    for (Eigen::Index t = 0; t < e; ++t)
        out += StridedMap(full.matrix.data() + t + t * d, k, k, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(e * d, e));
    return Operator(kept, std::move(out));
}

DensityOperator partial_trace(const DensityOperator& rho, const std::vector<std::string>& keep) {
    return assume_density(partial_trace(rho.op(), keep));
}

DensityOperator partial_trace(const PureState& psi, const std::vector<std::string>& keep) {
    ordered_targets(psi.system(), keep);
    const auto kept = psi.system().subsystem(keep);
    const auto traced = psi.system().complement(keep);
    auto order = kept.labels();
    for (const auto& l : traced.labels()) order.push_back(l);
    const auto full = reorder(psi, order);
    const auto k = static_cast<Eigen::Index>(kept.dim());
    const auto e = static_cast<Eigen::Index>(traced.dim());
    Eigen::Map<const Mat> a(full.amplitudes().data(), e, k);
    Mat rho = a.transpose() * a.conjugate();
    return assume_density(Operator(kept, std::move(rho)));
}

PureState purify(const DensityOperator& rho, const std::string& env_label, std::size_t env_dim) {
    const auto d = rho.system().dim();
    if (env_dim == 0) env_dim = d;
    const auto eig = linalg::hermitian_eigen(0.5 * (rho.matrix() + rho.matrix().adjoint()));
    const auto rank = linalg::numerical_rank(eig.values, 1e-13);
    if (rank > env_dim) throw InvalidArgument("purify: environment dimension below rank");
    auto sys = rho.system().concat(RegisterSystem({{env_label, env_dim}}));
    Vec amp = Vec::Zero(static_cast<Eigen::Index>(d * env_dim));
    const auto n = eig.values.size();
    const auto used = std::min<Eigen::Index>(static_cast<Eigen::Index>(env_dim), n);
    for (Eigen::Index i = 0; i < used; ++i) {
        const auto col = n - 1 - i;  // descending
        // same roundoff cutoff as sqrt_psd; a 1e-16 eigenvalue would
        // otherwise contribute a 1e-8 amplitude
        if (eig.values(col) < 1e-14) continue;
        const double w = std::sqrt(eig.values(col));
        for (Eigen::Index s = 0; s < static_cast<Eigen::Index>(d); ++s)
            amp(s * static_cast<Eigen::Index>(env_dim) + i) = w * eig.vectors(s, col);
    }
    amp.normalize();
    return PureState(std::move(sys), std::move(amp));
}

PureState purify_minimal(const DensityOperator& rho, const std::string& env_label) {
    const auto eig = linalg::hermitian_eigen(0.5 * (rho.matrix() + rho.matrix().adjoint()));
    const auto rank = std::max<std::size_t>(1, linalg::numerical_rank(eig.values, 1e-13));
    return purify(rho, env_label, rank);
}

namespace {

// Squared Bures distance ‖√ρ − √σ W‖²_F with W the unitary of the polar
// decomposition of √σ√ρ.  Summing squared residuals avoids the cancellation
// in 1 − F for nearly equal states.
double bures_squared(const DensityOperator& rho, const DensityOperator& sigma) {
    require_same_labels(rho.system(), sigma.system(), "fidelity");
    const auto s = reorder(sigma, rho.system().labels());
    const Mat root_rho = linalg::sqrt_psd(0.5 * (rho.matrix() + rho.matrix().adjoint()));
    const Mat root_sigma = linalg::sqrt_psd(0.5 * (s.matrix() + s.matrix().adjoint()));
    Eigen::BDCSVD<Mat> svd(root_sigma * root_rho, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat w = svd.matrixU() * svd.matrixV().adjoint();
    return (root_rho - root_sigma * w).squaredNorm();
}

// Rows indexed by `keep`, columns by the rest.
Mat reduced_factor(const PureState& psi, const std::vector<std::string>& keep) {
    std::vector<std::string> order = keep;
    for (const auto& l : psi.system().complement(keep).labels()) order.push_back(l);
    const auto full = reorder(psi, order);
    const auto dk = static_cast<Eigen::Index>(psi.system().select(keep).dim());
    const auto de = static_cast<Eigen::Index>(psi.system().dim()) / dk;
    return Eigen::Map<const Mat>(full.amplitudes().data(), de, dk).transpose();
}

// min ‖A − B W‖²_F over W with orthonormal rows, B the narrower factor;
// equals the squared Bures distance of A A† and B B†.
double bures_squared(const PureState& phi, const PureState& psi, const std::vector<std::string>& keep) {
    ordered_targets(phi.system(), keep);
    ordered_targets(psi.system(), keep);
    for (const auto& l : keep)
        if (phi.system().at(l).dim != psi.system().at(l).dim) throw InvalidArgument("fidelity: kept registers differ");
    const auto dk = static_cast<double>(phi.system().select(keep).dim());
    const auto de1 = static_cast<double>(phi.system().dim()) / dk;
    const auto de2 = static_cast<double>(psi.system().dim()) / dk;
    if (de1 * de2 > 4.0 * dk * dk) return bures_squared(partial_trace(phi, keep), partial_trace(psi, keep));
    Mat a = reduced_factor(phi, keep);
    Mat b = reduced_factor(psi, keep);
    if (b.cols() > a.cols()) std::swap(a, b);
    Eigen::BDCSVD<Mat> svd(b.adjoint() * a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Mat w = svd.matrixU() * svd.matrixV().adjoint();
    return (a - b * w).squaredNorm();
}

}  // namespace

double fidelity(const PureState& phi, const PureState& psi, const std::vector<std::string>& keep) {
    return std::clamp(1.0 - 0.5 * bures_squared(phi, psi, keep), 0.0, 1.0);
}

double purified_distance(const PureState& phi, const PureState& psi, const std::vector<std::string>& keep) {
    const double b2 = std::clamp(bures_squared(phi, psi, keep), 0.0, 2.0);
    return std::sqrt(std::max(0.0, 0.5 * b2 * (2.0 - 0.5 * b2)));
}

double fidelity(const DensityOperator& rho, const DensityOperator& sigma) {
    return std::clamp(1.0 - 0.5 * bures_squared(rho, sigma), 0.0, 1.0);
}

double purified_distance(const DensityOperator& rho, const DensityOperator& sigma) {
    const double b2 = std::clamp(bures_squared(rho, sigma), 0.0, 2.0);
    // 1 − F² = (1 − F)(1 + F) with 1 − F = B²/2
    return std::sqrt(std::max(0.0, 0.5 * b2 * (2.0 - 0.5 * b2)));
}

double classical_fidelity(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw InvalidArgument("classical_fidelity: size mismatch");
    linalg::KahanSum s;
    for (std::size_t i = 0; i < p.size(); ++i) s.add(std::sqrt(std::max(0.0, p[i]) * std::max(0.0, q[i])));
    return std::min(1.0, s.value());
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw InvalidArgument("total_variation: size mismatch");
    linalg::KahanSum s;
    for (std::size_t i = 0; i < p.size(); ++i) s.add(std::abs(p[i] - q[i]));
    return 0.5 * s.value();
}

// ---------------------------------------------------------------------------
// Channel application

namespace {

struct Split {
    RegisterSystem rest;
    std::vector<std::string> order;  // rest then channel inputs
};

Split split_for(const QuantumChannel& ch, const RegisterSystem& sys) {
    std::vector<std::string> inputs = ch.input_system().labels();
    for (const auto& r : ch.input_system().registers()) {
        if (!sys.contains(r.label)) throw InvalidArgument("channel input register '" + r.label + "' not present");
        if (sys.at(r.label).dim != r.dim) throw InvalidArgument("channel input register '" + r.label + "' dimension mismatch");
    }
    Split s{sys.complement(inputs), {}};
    s.order = s.rest.labels();
    for (const auto& l : inputs) s.order.push_back(l);
    for (const auto& r : ch.output_system().registers())
        if (s.rest.contains(r.label)) throw InvalidArgument("channel output register '" + r.label + "' collides with untouched register");
    return s;
}

}  // namespace

Operator apply_channel(const QuantumChannel& ch, const Operator& op) {
    const auto split = split_for(ch, op.system);
    const auto full = reorder(op, split.order);
    const auto r = static_cast<Eigen::Index>(split.rest.dim());
    const auto ti = static_cast<Eigen::Index>(ch.input_system().dim());
    const auto to = static_cast<Eigen::Index>(ch.output_system().dim());
    Mat out = Mat::Zero(r * to, r * to);
    Mat left(r * to, r * ti);
    for (const auto& k : ch.kraus()) {
        for (Eigen::Index i = 0; i < r; ++i) left.middleRows(i * to, to).noalias() = k * full.matrix.middleRows(i * ti, ti);
        const Mat kadj = k.adjoint();
        for (Eigen::Index j = 0; j < r; ++j) out.middleCols(j * to, to).noalias() += left.middleCols(j * ti, ti) * kadj;
    }
    return Operator(split.rest.concat(ch.output_system()), std::move(out));
}

DensityOperator apply_channel(const QuantumChannel& ch, const DensityOperator& rho) {
    return assume_density(apply_channel(ch, rho.op()));
}

PureState apply_isometry(const QuantumChannel& ch, const PureState& psi) {
    if (!ch.is_isometry()) throw InvalidArgument("apply_isometry: channel has more than one Kraus operator");
    const auto split = split_for(ch, psi.system());
    const auto full = reorder(psi, split.order);
    const auto r = static_cast<Eigen::Index>(split.rest.dim());
    const auto ti = static_cast<Eigen::Index>(ch.input_system().dim());
    Eigen::Map<const Mat> a(full.amplitudes().data(), ti, r);
    Mat b = ch.kraus().front() * a;
    Vec out = Eigen::Map<const Vec>(b.data(), b.size());
    return PureState(split.rest.concat(ch.output_system()), std::move(out));
}

DensityOperator dephase(const DensityOperator& rho, const std::vector<std::string>& targets) {
    ordered_targets(rho.system(), targets);
    const auto keys = target_keys(rho.system(), targets);
    Mat m = rho.matrix();
    const auto d = m.rows();
    for (Eigen::Index c = 0; c < d; ++c)
        for (Eigen::Index r = 0; r < d; ++r)
            if (keys[r] != keys[c]) m(r, c) = 0.0;
    return assume_density(Operator(rho.system(), std::move(m)));
}

// ---------------------------------------------------------------------------
// Measurement

namespace {

constexpr double kOutcomeFloor = 1e-14;

std::vector<std::size_t> outcome_digits(const RegisterSystem& sys, const std::vector<std::string>& targets, std::size_t key) {
    return sys.select(targets).digits(key);
}

}  // namespace

std::vector<double> marginal_distribution(const PureState& psi, const std::vector<std::string>& targets) {
    ordered_targets(psi.system(), targets);
    const auto keys = target_keys(psi.system(), targets);
    std::vector<double> out(psi.system().select(targets).dim(), 0.0);
    for (std::size_t i = 0; i < keys.size(); ++i) out[keys[i]] += std::norm(psi.amplitudes()(static_cast<Eigen::Index>(i)));
    return out;
}

std::vector<double> marginal_distribution(const DensityOperator& rho, const std::vector<std::string>& targets) {
    ordered_targets(rho.system(), targets);
    const auto keys = target_keys(rho.system(), targets);
    std::vector<double> out(rho.system().select(targets).dim(), 0.0);
    for (std::size_t i = 0; i < keys.size(); ++i) out[keys[i]] += rho.matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
    return out;
}

std::vector<MeasurementOutcome<PureState>> measure_computational(const PureState& psi, const std::vector<std::string>& targets) {
    ordered_targets(psi.system(), targets);
    const auto keys = target_keys(psi.system(), targets);
    const auto probs = marginal_distribution(psi, targets);
    std::vector<MeasurementOutcome<PureState>> out;
    for (std::size_t key = 0; key < probs.size(); ++key) {
        if (probs[key] <= kOutcomeFloor) continue;
        Vec v = Vec::Zero(psi.amplitudes().size());
        for (std::size_t i = 0; i < keys.size(); ++i)
            if (keys[i] == key) v(static_cast<Eigen::Index>(i)) = psi.amplitudes()(static_cast<Eigen::Index>(i));
        v /= std::sqrt(probs[key]);
        v.normalize();
        out.push_back({outcome_digits(psi.system(), targets, key), probs[key], PureState(psi.system(), std::move(v))});
    }
    return out;
}

std::vector<MeasurementOutcome<DensityOperator>> measure_computational(const DensityOperator& rho,
                                                                        const std::vector<std::string>& targets) {
    ordered_targets(rho.system(), targets);
    const auto keys = target_keys(rho.system(), targets);
    const auto probs = marginal_distribution(rho, targets);
    std::vector<MeasurementOutcome<DensityOperator>> out;
    const auto d = rho.matrix().rows();
    for (std::size_t key = 0; key < probs.size(); ++key) {
        if (probs[key] <= kOutcomeFloor) continue;
        Mat m = Mat::Zero(d, d);
        for (Eigen::Index c = 0; c < d; ++c)
            for (Eigen::Index r = 0; r < d; ++r)
                if (keys[r] == key && keys[c] == key) m(r, c) = rho.matrix()(r, c);
        m /= m.trace().real();
        out.push_back({outcome_digits(rho.system(), targets, key), probs[key], assume_density(Operator(rho.system(), std::move(m)))});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Uhlmann

double overlap(const PureState& a, const PureState& b) {
    require_same_labels(a.system(), b.system(), "overlap");
    const auto aligned = reorder(b, a.system().labels());
    return std::abs(a.amplitudes().dot(aligned.amplitudes()));
}

UhlmannResult uhlmann_isometry(const PureState& phi, const PureState& psi, const std::vector<std::string>& env_phi,
                               const std::vector<std::string>& env_psi, const std::string& pad_label) {
    ordered_targets(phi.system(), env_phi);
    ordered_targets(psi.system(), env_psi);
    const auto shared_phi = phi.system().complement(env_phi);
    const auto shared_psi = psi.system().complement(env_psi);
    require_same_labels(shared_phi, shared_psi, "uhlmann_isometry: shared systems");

    auto order_phi = shared_phi.labels();
    auto order_psi = shared_phi.labels();
    for (const auto& l : env_phi) order_phi.push_back(l);
    for (const auto& l : env_psi) order_psi.push_back(l);
    const auto phi_r = reorder(phi, order_phi);
    const auto psi_r = reorder(psi, order_psi);

    const auto env_in = phi.system().select(env_phi);
    auto env_out = psi.system().select(env_psi);
    const auto a = static_cast<Eigen::Index>(shared_phi.dim());
    const auto e1 = static_cast<Eigen::Index>(env_in.dim());
    const auto e2 = static_cast<Eigen::Index>(env_out.dim());

    Eigen::Map<const Mat> phi_m(phi_r.amplitudes().data(), e1, a);
    Eigen::Map<const Mat> psi_m(psi_r.amplitudes().data(), e2, a);
    const Mat x = phi_m * psi_m.adjoint();  // x(e1, e2) = Σ_a φ[a,e1] conj(ψ[a,e2])

    std::optional<Register> padding;
    Eigen::Index pad = 1;
    if (e2 < e1) {
        pad = (e1 + e2 - 1) / e2;
        if (env_out.contains(pad_label) || shared_phi.contains(pad_label))
            throw InvalidArgument("uhlmann_isometry: padding label collides");
        padding = Register{pad_label, static_cast<std::size_t>(pad)};
        env_out = env_out.concat(RegisterSystem({*padding}));
    }
    const auto e2p = e2 * pad;

    Eigen::BDCSVD<Mat> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Mat& u = svd.matrixU();  // e1 × k
    const Mat& v = svd.matrixV();  // e2 × k
    const auto k = u.cols();

    Mat w = Mat::Zero(e2p, k);  // v embedded as v ⊗ |0⟩_pad
    for (Eigen::Index r = 0; r < e2; ++r) w.row(r * pad) = v.row(r);

    // T = w u† plus any isometry between the complements.  With
    // u = Q_u[:, :k] R_u and w = Q_w[:, :k] R_w from Householder QR,
    // T = Q_w · blockdiag(R_w R_u†, I) · Q_u†.
    Eigen::HouseholderQR<Mat> qr_u(u);
    Eigen::HouseholderQR<Mat> qr_w(w);
    const Mat r_u = qr_u.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    const Mat r_w = qr_w.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    if (e2p < e1) throw InvalidArgument("uhlmann_isometry: environment dimension deficiency");
    Mat mid = Mat::Zero(e2p, e1);
    mid.topLeftCorner(k, k) = r_w * r_u.adjoint();
    mid.block(k, k, e1 - k, e1 - k).setIdentity();
    Mat t = qr_w.householderQ() * mid;
    t = (qr_u.householderQ() * t.adjoint()).adjoint();

    double achieved = 0.0;
    {
        cplx tr = 0.0;
        // Tr(T X) = Σ_{e2,e1} T[e2,e1] X[e1,e2]; padded rows of X are zero
        for (Eigen::Index r = 0; r < e2; ++r) tr += (t.row(r * pad) * x.col(r))(0, 0);
        achieved = std::abs(tr);
    }
    return UhlmannResult{QuantumChannel::trusted_isometry(env_in, env_out, std::move(t)), achieved, padding};
}

}  // namespace qlab
