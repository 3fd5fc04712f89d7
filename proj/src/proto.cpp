#include "qlab/proto.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "qlab/linalg.hpp"

namespace qlab {

namespace {

bool reserved(const std::string& label) {
    return label == labels::R || label == labels::Xc || label == labels::Yc;
}

std::string swap_label(const std::string& l) {
    static const std::map<std::string, std::string> swaps = {
        {labels::U, labels::V}, {labels::V, labels::U}, {labels::X, labels::Y},
        {labels::Y, labels::X}, {labels::Xc, labels::Yc}, {labels::Yc, labels::Xc}};
    const auto it = swaps.find(l);
    return it == swaps.end() ? l : it->second;
}

RegisterSystem swap_labels(const RegisterSystem& sys) {
    std::vector<Register> out;
    for (const auto& r : sys.registers()) out.push_back({swap_label(r.label), r.dim});
    return RegisterSystem(std::move(out));
}

DensityOperator as_density(const PureState& psi) { return DensityOperator(psi); }

}  // namespace

// ---------------------------------------------------------------------------
// ClassicalFunction / JointDistribution

ClassicalFunction::ClassicalFunction(std::string name, std::size_t u_size, std::size_t v_size,
                                     std::size_t output_size, std::vector<std::size_t> table,
                                     std::optional<std::vector<std::size_t>> bob_table)
    : name_(std::move(name)), u_size_(u_size), v_size_(v_size), output_size_(output_size),
      table_(std::move(table)), bob_table_(std::move(bob_table)) {
    if (u_size_ == 0 || v_size_ == 0 || output_size_ == 0) throw InvalidArgument("function domains must be non-empty");
    auto check = [&](const std::vector<std::size_t>& t) {
        if (t.size() != u_size_ * v_size_) throw InvalidArgument("truth table is not total on U × V");
        for (auto x : t)
            if (x >= output_size_) throw InvalidArgument("truth table value outside the output alphabet");
    };
    check(table_);
    if (bob_table_) check(*bob_table_);
}

std::size_t ClassicalFunction::bob(std::size_t u, std::size_t v) const {
    return bob_table_ ? bob_table_->at(u * v_size_ + v) : (*this)(u, v);
}

ClassicalFunction ClassicalFunction::swapped() const {
    std::vector<std::size_t> first(u_size_ * v_size_), second(u_size_ * v_size_);
    for (std::size_t u = 0; u < u_size_; ++u)
        for (std::size_t v = 0; v < v_size_; ++v) {
            first[v * u_size_ + u] = bob(u, v);
            second[v * u_size_ + u] = (*this)(u, v);
        }
    std::optional<std::vector<std::size_t>> bt;
    if (bob_table_) bt = std::move(second);
    return ClassicalFunction(name_ + "-swapped", v_size_, u_size_, output_size_, std::move(first), std::move(bt));
}

JointDistribution::JointDistribution(std::size_t u_size, std::size_t v_size, std::vector<double> weights)
    : u_size_(u_size), v_size_(v_size), weights_(std::move(weights)) {
    if (u_size_ == 0 || v_size_ == 0) throw InvalidArgument("distribution domains must be non-empty");
    if (weights_.size() != u_size_ * v_size_) throw InvalidArgument("distribution size does not match U × V");
    linalg::KahanSum s;
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("distribution weights must be nonnegative");
        s.add(w);
    }
    if (std::abs(s.value() - 1.0) > 1e-12) throw InvalidArgument("distribution weights do not sum to 1");
}

JointDistribution JointDistribution::uniform(std::size_t u_size, std::size_t v_size) {
    return JointDistribution(u_size, v_size, std::vector<double>(u_size * v_size, 1.0 / static_cast<double>(u_size * v_size)));
}

JointDistribution JointDistribution::point(std::size_t u_size, std::size_t v_size, std::size_t u, std::size_t v) {
    if (u >= u_size || v >= v_size) throw InvalidArgument("point mass outside the domain");
    std::vector<double> w(u_size * v_size, 0.0);
    w[u * v_size + v] = 1.0;
    return JointDistribution(u_size, v_size, std::move(w));
}

JointDistribution JointDistribution::swapped() const {
    std::vector<double> w(weights_.size());
    for (std::size_t u = 0; u < u_size_; ++u)
        for (std::size_t v = 0; v < v_size_; ++v) w[v * u_size_ + u] = (*this)(u, v);
    return JointDistribution(v_size_, u_size_, std::move(w));
}

// ---------------------------------------------------------------------------
// TwoPartyProtocol

TwoPartyProtocol::TwoPartyProtocol(std::size_t u_size, std::size_t v_size, RegisterSystem alice_ancillas,
                                   RegisterSystem bob_ancillas, std::vector<Round> rounds)
    : u_size_(u_size), v_size_(v_size), alice_ancillas_(std::move(alice_ancillas)),
      bob_ancillas_(std::move(bob_ancillas)), rounds_(std::move(rounds)) {
    if (u_size_ == 0 || v_size_ == 0) throw InvalidArgument("input sizes must be positive");

    struct Held {
        std::size_t dim;
        Party owner;
    };
    std::map<std::string, Held> held;
    std::vector<std::string> order_a, order_b;
    auto list = [&](Party p) -> std::vector<std::string>& { return p == Party::Alice ? order_a : order_b; };
    auto add = [&](const std::string& label, std::size_t dim, Party p) {
        if (reserved(label)) throw InvalidArgument("register label '" + label + "' is reserved");
        if (!held.emplace(label, Held{dim, p}).second) throw InvalidArgument("register '" + label + "' already exists");
        list(p).push_back(label);
    };
    auto drop = [&](const std::string& label) {
        auto& l = list(held.at(label).owner);
        l.erase(std::find(l.begin(), l.end(), label));
        held.erase(label);
    };

    add(labels::U, u_size_, Party::Alice);
    add(labels::V, v_size_, Party::Bob);
    for (const auto& r : alice_ancillas_.registers()) add(r.label, r.dim, Party::Alice);
    for (const auto& r : bob_ancillas_.registers()) add(r.label, r.dim, Party::Bob);

    for (std::size_t i = 0; i < rounds_.size(); ++i) {
        const auto& round = rounds_[i];
        const std::string where = "round " + std::to_string(i) + ": ";
        for (const auto& r : round.op.input_system().registers()) {
            const auto it = held.find(r.label);
            if (it == held.end()) throw InvalidArgument(where + "input register '" + r.label + "' does not exist");
            if (it->second.owner != round.party) throw InvalidArgument(where + "register '" + r.label + "' is not held by the actor");
            if (it->second.dim != r.dim) throw InvalidArgument(where + "register '" + r.label + "' dimension mismatch");
        }
        for (const auto& r : round.op.input_system().registers()) drop(r.label);
        for (const auto& r : round.op.output_system().registers()) add(r.label, r.dim, round.party);
        if (!round.op.is_isometry()) {
            if (round.env_label.empty()) throw InvalidArgument(where + "non-isometric round needs an environment label");
            add(round.env_label, round.op.kraus().size(), round.party);
        }
        for (const auto& label : round.send) {
            const auto it = held.find(label);
            if (it == held.end() || it->second.owner != round.party)
                throw InvalidArgument(where + "sent register '" + label + "' is not held by the actor");
            const auto dim = it->second.dim;
            drop(label);
            add(label, dim, other(round.party));
        }
    }

    const auto x = held.find(labels::X);
    if (x == held.end() || x->second.owner != Party::Alice) throw InvalidArgument("Alice does not hold X at the end");
    const auto y = held.find(labels::Y);
    if (y == held.end() || y->second.owner != Party::Bob) throw InvalidArgument("Bob does not hold Y at the end");
    x_size_ = x->second.dim;
    y_size_ = y->second.dim;
    alice_final_ = order_a;
    bob_final_ = order_b;
}

TwoPartyProtocol TwoPartyProtocol::swapped() const {
    std::vector<Round> rounds;
    for (const auto& r : rounds_) {
        std::vector<std::string> send;
        for (const auto& l : r.send) send.push_back(swap_label(l));
        rounds.push_back({other(r.party),
                          QuantumChannel(swap_labels(r.op.input_system()), swap_labels(r.op.output_system()), r.op.kraus()),
                          std::move(send), swap_label(r.env_label)});
    }
    return TwoPartyProtocol(v_size_, u_size_, swap_labels(bob_ancillas_), swap_labels(alice_ancillas_), std::move(rounds));
}

// ---------------------------------------------------------------------------
// Ideal world

void IdealAdversary::validate(std::size_t v_size, std::size_t y_size) const {
    if (pre.input_system() != RegisterSystem({{labels::V, v_size}}))
        throw InvalidArgument("ideal adversary: pre-processing must act on V alone");
    if (!pre.output_system().contains(labels::Vt) || pre.output_system().at(labels::Vt).dim != v_size)
        throw InvalidArgument("ideal adversary: pre-processing must output Vt");
    const auto k = pre.output_system().complement({labels::Vt});
    const auto expected = k.concat(RegisterSystem({{labels::Yt, y_size}}));
    const auto& in = post.input_system();
    if (in.size() != expected.size()) throw InvalidArgument("ideal adversary: post-processing inputs must be K and Yt");
    for (const auto& r : expected.registers())
        if (!in.contains(r.label) || in.at(r.label).dim != r.dim)
            throw InvalidArgument("ideal adversary: post-processing input '" + r.label + "' mismatch");
    for (const auto& l : {labels::R, labels::X, labels::Vt})
        if (post.output_system().contains(l)) throw InvalidArgument("ideal adversary: output label '" + l + "' is reserved");
}

IdealAdversary IdealAdversary::forwarding(std::size_t v_size, std::size_t y_size) {
    return {QuantumChannel::relabel(RegisterSystem({{labels::V, v_size}}), RegisterSystem({{labels::Vt, v_size}})),
            QuantumChannel::relabel(RegisterSystem({{labels::Yt, y_size}}), RegisterSystem({{labels::Y, y_size}}))};
}

PureState input_state(const JointDistribution& p) {
    const auto nu = p.u_size();
    const auto nv = p.v_size();
    RegisterSystem sys({{labels::R, nu * nv}, {labels::U, nu}, {labels::V, nv}});
    Vec amp = Vec::Zero(static_cast<Eigen::Index>(sys.dim()));
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t v = 0; v < nv; ++v)
            amp(static_cast<Eigen::Index>(sys.index({u * nv + v, u, v}))) = std::sqrt(p(u, v));
    amp.normalize();
    return PureState(std::move(sys), std::move(amp));
}

QuantumChannel functionality_channel(const ClassicalFunction& f, bool augmented, const std::string& u_label,
                                     const std::string& v_label) {
    const auto nu = f.u_size();
    const auto nv = f.v_size();
    const auto no = f.output_size();
    RegisterSystem in({{u_label, nu}, {v_label, nv}});
    std::vector<Register> out_regs{{labels::X, no}, {labels::Yt, no}};
    if (augmented) out_regs.push_back({labels::Vt, nv});
    RegisterSystem out(out_regs);
    std::vector<Mat> kraus;
    kraus.reserve(nu * nv);
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t v = 0; v < nv; ++v) {
            Mat k = Mat::Zero(static_cast<Eigen::Index>(out.dim()), static_cast<Eigen::Index>(in.dim()));
            std::vector<std::size_t> d{f(u, v), f.bob(u, v)};
            if (augmented) d.push_back(v);
            k(static_cast<Eigen::Index>(out.index(d)), static_cast<Eigen::Index>(in.index({u, v}))) = 1.0;
            kraus.push_back(std::move(k));
        }
    return QuantumChannel(std::move(in), std::move(out), std::move(kraus));
}

DensityOperator apply_ideal_functionality(const ClassicalFunction& f, const DensityOperator& rho) {
    return apply_channel(functionality_channel(f, false), rho);
}

DensityOperator apply_augmented_functionality(const ClassicalFunction& f, const DensityOperator& rho) {
    return apply_channel(functionality_channel(f, true), rho);
}

PureState run_ideal_purified(const ClassicalFunction& f, const JointDistribution& p,
                             const std::optional<IdealAdversary>& adversary, bool augmented,
                             const std::string& env_label) {
    if (p.u_size() != f.u_size() || p.v_size() != f.v_size())
        throw InvalidArgument("run_ideal: distribution and function domains differ");
    const auto adv = adversary.value_or(IdealAdversary::forwarding(f.v_size(), f.output_size()));
    adv.validate(f.v_size(), f.output_size());

    auto psi = input_state(p);
    std::vector<std::string> envs;
    auto step = [&](const QuantumChannel& ch, const std::string& env) {
        if (ch.is_isometry()) {
            psi = apply_isometry(ch, psi);
        } else {
            psi = apply_isometry(ch.dilate(env), psi);
            envs.push_back(env);
        }
    };
    step(adv.pre, env_label + "_pre");
    step(functionality_channel(f, augmented), env_label + "_f");
    step(adv.post, env_label + "_post");

    std::vector<std::string> order{labels::R, labels::X};
    if (augmented) order.push_back(labels::Vt);
    for (const auto& l : adv.post.output_system().labels()) order.push_back(l);
    if (order.size() + envs.size() != psi.system().size())
        throw InvalidArgument("run_ideal: adversary leaves stray registers");
    auto kept = psi.system().select(order);
    for (const auto& e : envs) order.push_back(e);
    psi = reorder(psi, order);
    // Trailing environments merge into one register of the product dimension.
    const auto env_dim = psi.system().dim() / kept.dim();
    return PureState(kept.concat(RegisterSystem({{env_label, env_dim}})), psi.amplitudes());
}

DensityOperator run_ideal(const ClassicalFunction& f, const JointDistribution& p,
                          const std::optional<IdealAdversary>& adversary, bool augmented) {
    const auto psi = run_ideal_purified(f, p, adversary, augmented, "P");
    const auto keep = psi.system().complement({"P"}).labels();
    return reorder(partial_trace(psi, keep), keep);
}

// ---------------------------------------------------------------------------
// Real world

DensityOperator run_honest(const TwoPartyProtocol& protocol, const JointDistribution& p) {
    if (p.u_size() != protocol.u_size() || p.v_size() != protocol.v_size())
        throw InvalidArgument("run_honest: distribution and protocol input sizes differ");
    const auto& rounds = protocol.rounds();
    auto used_after = [&](const std::string& label, std::size_t from) {
        for (std::size_t j = from; j < rounds.size(); ++j)
            if (rounds[j].op.input_system().contains(label)) return true;
        return false;
    };
    auto keep = [](const std::string& l) { return l == labels::R || l == labels::X || l == labels::Y; };
    auto discard_dead = [&](DensityOperator& rho, std::size_t next) {
        std::vector<std::string> live;
        for (const auto& l : rho.system().labels())
            if (keep(l) || used_after(l, next)) live.push_back(l);
        if (live.size() != rho.system().size()) rho = partial_trace(rho, live);
    };

    auto rho = as_density(input_state(p));
    discard_dead(rho, 0);
    std::set<std::string> ancillas_added;
    for (std::size_t i = 0; i < rounds.size(); ++i) {
        for (const auto& r : rounds[i].op.input_system().registers()) {
            if (rho.system().contains(r.label) || ancillas_added.count(r.label)) continue;
            const bool alice = protocol.alice_ancillas().contains(r.label);
            const bool bob = protocol.bob_ancillas().contains(r.label);
            if (!alice && !bob) throw InvalidArgument("run_honest: register '" + r.label + "' unavailable");
            rho = tensor(rho, as_density(PureState::basis(RegisterSystem({r}), {0})));
            ancillas_added.insert(r.label);
        }
        rho = apply_channel(rounds[i].op, rho);
        discard_dead(rho, i + 1);
    }
    for (const auto& l : {labels::X, labels::Y}) {
        if (rho.system().contains(l)) continue;  // output ancilla no round touched
        const auto& anc = l == labels::X ? protocol.alice_ancillas() : protocol.bob_ancillas();
        rho = tensor(rho, as_density(PureState::basis(RegisterSystem({anc.at(l)}), {0})));
    }
    rho = dephase(rho, {labels::X, labels::Y});
    return reorder(partial_trace(rho, {labels::R, labels::X, labels::Y}), {labels::R, labels::X, labels::Y});
}

QuantumChannel classical_isometry(const RegisterSystem& in, const RegisterSystem& out, const DigitMap& fn) {
    Mat m = Mat::Zero(static_cast<Eigen::Index>(out.dim()), static_cast<Eigen::Index>(in.dim()));
    std::vector<bool> hit(out.dim(), false);
    for (std::size_t i = 0; i < in.dim(); ++i) {
        const auto o = out.index(fn(in.digits(i)));
        if (hit[o]) throw InvalidArgument("classical_isometry: map is not injective");
        hit[o] = true;
        m(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i)) = 1.0;
    }
    return QuantumChannel::trusted_isometry(in, out, std::move(m));
}

QuantumChannel copy_channel(const std::string& source, const std::string& target, std::size_t d) {
    const auto n = static_cast<Eigen::Index>(d);
    Mat m = Mat::Zero(n * n, n);
    for (Eigen::Index x = 0; x < n; ++x) m(x * n + x, x) = 1.0;
    return QuantumChannel::trusted_isometry(RegisterSystem({{source, d}}), RegisterSystem({{source, d}, {target, d}}),
                                            std::move(m));
}

std::vector<std::string> PurifiedRun::bob_dishonest() const {
    auto out = bob_purification;
    out.push_back(labels::Y);
    return out;
}

PurifiedRun run_purified(const TwoPartyProtocol& protocol, const JointDistribution& p) {
    if (p.u_size() != protocol.u_size() || p.v_size() != protocol.v_size())
        throw InvalidArgument("run_purified: distribution and protocol input sizes differ");
    auto psi = input_state(p);
    for (const auto* anc : {&protocol.alice_ancillas(), &protocol.bob_ancillas()})
        if (anc->size() > 0) psi = tensor(psi, PureState::basis(*anc, std::vector<std::size_t>(anc->size(), 0)));
    for (const auto& round : protocol.rounds())
        psi = apply_isometry(round.op.is_isometry() ? round.op : round.op.dilate(round.env_label), psi);
    psi = apply_isometry(copy_channel(labels::X, labels::Xc, protocol.x_size()), psi);
    psi = apply_isometry(copy_channel(labels::Y, labels::Yc, protocol.y_size()), psi);

    PurifiedRun run{std::move(psi), {}, {}};
    for (const auto& l : protocol.alice_final())
        if (l != labels::X) run.alice_purification.push_back(l);
    run.alice_purification.push_back(labels::Xc);
    for (const auto& l : protocol.bob_final())
        if (l != labels::Y) run.bob_purification.push_back(l);
    run.bob_purification.push_back(labels::Yc);
    return run;
}

double correctness_epsilon(const TwoPartyProtocol& protocol, const ClassicalFunction& f, const JointDistribution& p) {
    if (protocol.x_size() != f.output_size() || protocol.y_size() != f.output_size())
        throw InvalidArgument("correctness_epsilon: output registers do not match the function alphabet");
    // Tracing the copies Xc, Yc dephases X and Y, so the purified run gives
    // the honest measured state on R, X, Y.
    return purified_distance(run_purified(protocol, p).phi, run_ideal_purified(f, p, std::nullopt, false),
                             {labels::R, labels::X, labels::Y});
}

double security_epsilon(const TwoPartyProtocol& protocol, const ClassicalFunction& f, const JointDistribution& p,
                        const IdealAdversary& adversary) {
    const auto run = run_purified(protocol, p);
    std::vector<std::string> keep{labels::R, labels::X};
    for (const auto& l : run.bob_dishonest()) keep.push_back(l);
    return purified_distance(run.phi, run_ideal_purified(f, p, adversary, true, "P"), keep);
}

double security_epsilon_alice(const TwoPartyProtocol& protocol, const ClassicalFunction& f,
                              const JointDistribution& p, const IdealAdversary& adversary_for_swapped) {
    return security_epsilon(protocol.swapped(), f.swapped(), p.swapped(), adversary_for_swapped);
}

}  // namespace qlab
