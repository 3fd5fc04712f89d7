#include "qlab/funcs.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <regex>

#include "qlab/linalg.hpp"

namespace qlab {

namespace {

using Digits = std::vector<std::size_t>;

std::size_t isqrt(std::size_t n) {
    std::size_t r = 0;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

// Bob's side of a reveal-style protocol, rebuilt from K (a copy of v) and Yt.
IdealAdversary copying_simulator(std::size_t nv, std::size_t no) {
    const auto copy = copy_channel(labels::V, "K", nv);
    auto pre = QuantumChannel::trusted_isometry(RegisterSystem({{labels::V, nv}}),
                                                RegisterSystem({{labels::Vt, nv}, {"K", nv}}), copy.kraus()[0]);
    auto post = classical_isometry(RegisterSystem({{"K", nv}, {labels::Yt, no}}),
                                   RegisterSystem({{labels::V, nv}, {labels::Yc, no}, {labels::Y, no}}),
                                   [](const Digits& d) { return Digits{d[0], d[1], d[1]}; });
    return {std::move(pre), std::move(post)};
}

Round answer_round(const ClassicalFunction& f, const std::string& message) {
    const auto nu = f.u_size();
    const auto nv = f.v_size();
    const auto no = f.output_size();
    return {Party::Alice,
            classical_isometry(RegisterSystem({{labels::U, nu}, {message, nv}}),
                               RegisterSystem({{labels::U, nu}, {message, nv}, {labels::X, no}, {labels::Y, no}}),
                               [&f](const Digits& d) { return Digits{d[0], d[1], f(d[0], d[1]), f.bob(d[0], d[1])}; }),
            {labels::Y},
            ""};
}

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c) out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
    return out;
}

Mat hadamard_transform(std::size_t n) {
    Mat h(2, 2);
    h << 1, 1, 1, -1;
    h /= std::numbers::sqrt2;
    Mat out = Mat::Identity(1, 1);
    for (std::size_t i = 0; i < n; ++i) out = kron(out, h);
    return out;
}

std::string format_delta(double delta) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", delta);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Functions

FunctionKind parse_function_kind(const std::string& name) {
    if (name == "eq" || name == "EQ") return FunctionKind::EQ;
    if (name == "ip" || name == "IP") return FunctionKind::IP;
    if (name == "disj" || name == "DISJ") return FunctionKind::DISJ;
    if (name == "ot" || name == "OT_LIKE") return FunctionKind::OT_LIKE;
    if (name == "const" || name == "CONST") return FunctionKind::CONST;
    throw InvalidArgument("unknown function kind '" + name + "'");
}

std::string to_string(FunctionKind kind) {
    switch (kind) {
        case FunctionKind::EQ: return "eq";
        case FunctionKind::IP: return "ip";
        case FunctionKind::DISJ: return "disj";
        case FunctionKind::OT_LIKE: return "ot";
        case FunctionKind::CONST: return "const";
    }
    return "?";
}

ClassicalFunction make_function(FunctionKind kind, std::size_t n) {
    if (n == 0 || n > kMaxFunctionBits)
        throw InvalidArgument("function size n = " + std::to_string(n) + " outside 1.." + std::to_string(kMaxFunctionBits));
    const std::size_t m = std::size_t{1} << n;
    const auto name = to_string(kind) + "-n" + std::to_string(n);
    if (kind == FunctionKind::OT_LIKE) {
        std::vector<std::size_t> t(m * m * 2);
        for (std::size_t u = 0; u < m * m; ++u)
            for (std::size_t b = 0; b < 2; ++b) t[u * 2 + b] = b * m + (b == 0 ? u >> n : u & (m - 1));
        return ClassicalFunction(name, m * m, 2, 2 * m, std::move(t));
    }
    std::vector<std::size_t> t(m * m);
    for (std::size_t u = 0; u < m; ++u)
        for (std::size_t v = 0; v < m; ++v) {
            std::size_t x = 0;
            switch (kind) {
                case FunctionKind::EQ: x = u == v; break;
                case FunctionKind::IP: x = std::popcount(u & v) % 2; break;
                case FunctionKind::DISJ: x = (u & v) == 0; break;
                default: x = 0; break;
            }
            t[u * m + v] = x;
        }
    return ClassicalFunction(name, m, m, 2, std::move(t));
}

// ---------------------------------------------------------------------------
// Protocol fixtures

Fixture classical_reveal_protocol(const ClassicalFunction& f) {
    std::vector<Round> rounds;
    rounds.push_back({Party::Bob, copy_channel(labels::V, "M1", f.v_size()), {"M1"}, ""});
    rounds.push_back(answer_round(f, "M1"));
    TwoPartyProtocol protocol(f.u_size(), f.v_size(), RegisterSystem(), RegisterSystem(), std::move(rounds));
    return Fixture{"reveal-" + f.name(), f, std::move(protocol), copying_simulator(f.v_size(), f.output_size()),
                   std::nullopt, 0.0, 0.0,
                   "Bob reveals v; Alice computes f and returns Bob's value."};
}

Fixture appendix_protocol(std::size_t n) {
    if (n == 0 || n > 2) throw InvalidArgument("appendix protocol supports n = 1 or 2");
    const auto f = make_function(FunctionKind::OT_LIKE, n);
    const std::size_t m = std::size_t{1} << n;
    const std::size_t nu = m * m;
    const std::size_t no = 2 * m;

    std::vector<Round> rounds;
    rounds.push_back({Party::Bob, copy_channel(labels::V, "M1", 2), {"M1"}, ""});
    rounds.push_back({Party::Alice,
                      classical_isometry(RegisterSystem({{labels::U, nu}, {"M1", 2}}),
                                         RegisterSystem({{labels::U, nu}, {"M1", 2}, {"M2", m}, {labels::X, no}}),
                                         [n, m](const Digits& d) {
                                             const auto s = d[1] == 0 ? d[0] >> n : d[0] & (m - 1);
                                             return Digits{d[0], d[1], s, d[1] * m + s};
                                         }),
                      {"M2"},
                      ""});
    rounds.push_back({Party::Bob,
                      classical_isometry(RegisterSystem({{labels::V, 2}, {"M2", m}}),
                                         RegisterSystem({{labels::V, 2}, {"M2", m}, {labels::Y, no}}),
                                         [m](const Digits& d) { return Digits{d[0], d[1], d[0] * m + d[1]}; }),
                      {},
                      ""});
    TwoPartyProtocol protocol(nu, 2, RegisterSystem(), RegisterSystem(), std::move(rounds));

    // Bob ends with V, M2 (= s_b) and Y; all are functions of b and F's answer.
    const auto copy = copy_channel(labels::V, "K", 2);
    auto pre = QuantumChannel::trusted_isometry(RegisterSystem({{labels::V, 2}}),
                                                RegisterSystem({{labels::Vt, 2}, {"K", 2}}), copy.kraus()[0]);
    auto post = classical_isometry(RegisterSystem({{"K", 2}, {labels::Yt, no}}),
                                   RegisterSystem({{labels::V, 2}, {"M2", m}, {labels::Yc, no}, {labels::Y, no}}),
                                   [m](const Digits& d) { return Digits{d[0], d[1] % m, d[1], d[1]}; });
    return Fixture{"appendix-n" + std::to_string(n), f, std::move(protocol), IdealAdversary{std::move(pre), std::move(post)},
                   std::nullopt, 0.0, 0.0,
                   "Bob sends b, Alice answers s_b; both output (b, s_b)."};
}

QuantumChannel depolarizing_channel(const std::string& label, std::size_t d, double delta) {
    if (!(delta >= 0.0 && delta <= 1.0)) throw InvalidArgument("depolarizing rate must lie in [0, 1]");
    const auto n = static_cast<Eigen::Index>(d);
    const double dd = static_cast<double>(d * d);
    std::vector<Mat> kraus;
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) {
            const double w = (a == 0 && b == 0) ? 1.0 - delta * (dd - 1.0) / dd : delta / dd;
            Mat k = Mat::Zero(n, n);
            for (Eigen::Index j = 0; j < n; ++j)
                k((j + a) % n, j) = std::sqrt(w) * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(b * j) / static_cast<double>(n));
            kraus.push_back(std::move(k));
        }
    const RegisterSystem sys({{label, d}});
    return QuantumChannel(sys, sys, std::move(kraus));
}

Fixture depolarize_fixture(const Fixture& base, double delta) {
    if (!(delta >= 0.0 && delta <= 1.0)) throw InvalidArgument("depolarizing rate must lie in [0, 1]");
    if (delta == 0.0) return base;

    const auto& old = base.protocol;
    // Dimension of every register at the time it is sent.
    std::vector<std::vector<std::size_t>> sent_dims;
    {
        std::map<std::string, std::size_t> dims{{labels::U, old.u_size()}, {labels::V, old.v_size()}};
        for (const auto* anc : {&old.alice_ancillas(), &old.bob_ancillas()})
            for (const auto& r : anc->registers()) dims[r.label] = r.dim;
        for (const auto& round : old.rounds()) {
            for (const auto& r : round.op.output_system().registers()) dims[r.label] = r.dim;
            std::vector<std::size_t> ds;
            for (const auto& l : round.send) ds.push_back(dims.at(l));
            sent_dims.push_back(std::move(ds));
        }
    }

    std::vector<Round> rounds;
    for (std::size_t i = 0; i < old.rounds().size(); ++i) {
        const auto& round = old.rounds()[i];
        auto noise = [&](std::size_t j) {
            const auto& l = round.send[j];
            return depolarizing_channel(l, sent_dims[i][j], delta);
        };
        auto env = [&](std::size_t j) { return "N" + std::to_string(i) + "_" + round.send[j]; };
        if (round.party == Party::Alice) {
            rounds.push_back({round.party, round.op, {}, round.env_label});
            for (std::size_t j = 0; j < round.send.size(); ++j)
                rounds.push_back({Party::Alice, noise(j), {round.send[j]}, env(j)});
        } else {
            rounds.push_back(round);
            for (std::size_t j = 0; j < round.send.size(); ++j) rounds.push_back({Party::Alice, noise(j), {}, env(j)});
        }
    }
    TwoPartyProtocol protocol(old.u_size(), old.v_size(), old.alice_ancillas(), old.bob_ancillas(), std::move(rounds));
    return Fixture{base.id + "@delta=" + format_delta(delta), base.function, std::move(protocol), base.ideal_adversary,
                   delta, std::nullopt, std::nullopt,
                   base.notes + " Messages depolarized at rate " + format_delta(delta) + "."};
}

// ---------------------------------------------------------------------------
// DISJ perturbation

std::vector<std::size_t> disj_flip_masks(std::size_t n, std::size_t v) {
    std::vector<std::size_t> ones;
    for (std::size_t i = 0; i < n; ++i)
        if (v >> i & 1) ones.push_back(i);
    if (2 * ones.size() <= n) return {};
    const auto k = isqrt(n);
    std::vector<std::size_t> masks;
    // k-subsets of `ones` in lexicographic order of positions
    std::vector<std::size_t> pick(k);
    for (std::size_t i = 0; i < k; ++i) pick[i] = i;
    while (true) {
        std::size_t mask = 0;
        for (auto p : pick) mask |= std::size_t{1} << ones[p];
        masks.push_back(mask);
        std::size_t i = k;
        while (i > 0 && pick[i - 1] == ones.size() - k + i - 1) --i;
        if (i == 0) break;
        ++pick[i - 1];
        for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
    }
    return masks;
}

Fixture disj_perturbed_fixture(std::size_t n) {
    if (n == 0 || n > 2) throw InvalidArgument("quantum DISJ fixture supports n ≤ 2");
    const auto f = make_function(FunctionKind::DISJ, n);
    const std::size_t m = std::size_t{1} << n;
    std::size_t records = 1;
    for (std::size_t v = 0; v < m; ++v) records = std::max(records, disj_flip_masks(n, v).size());

    // |v⟩ → |v⟩ Σ_c |v ⊕ mask_c⟩|c⟩ / √C, or |v⟩|v⟩|0⟩ when inactive.
    auto wrapper = [&](const std::string& keep, const std::string& work, const std::string& record,
                       const std::string& extra) {
        std::vector<Register> regs{{keep, m}, {work, m}, {record, records}};
        if (!extra.empty()) regs.insert(regs.begin(), Register{extra, m});
        const RegisterSystem out(regs);
        Mat map = Mat::Zero(static_cast<Eigen::Index>(out.dim()), static_cast<Eigen::Index>(m));
        for (std::size_t v = 0; v < m; ++v) {
            auto masks = disj_flip_masks(n, v);
            if (masks.empty()) masks.push_back(0);
            const double amp = 1.0 / std::sqrt(static_cast<double>(masks.size()));
            for (std::size_t c = 0; c < masks.size(); ++c) {
                Digits d{v, v ^ masks[c], c};
                if (!extra.empty()) d.insert(d.begin(), v ^ masks[c]);
                map(static_cast<Eigen::Index>(out.index(d)), static_cast<Eigen::Index>(v)) = amp;
            }
        }
        return QuantumChannel::isometry(RegisterSystem({{labels::V, m}}), out, std::move(map));
    };

    std::vector<Round> rounds;
    rounds.push_back({Party::Bob, wrapper(labels::V, "Vw", "Fl", ""), {}, ""});
    rounds.push_back({Party::Bob, copy_channel("Vw", "M1", m), {"M1"}, ""});
    rounds.push_back(answer_round(f, "M1"));
    TwoPartyProtocol protocol(m, m, RegisterSystem(), RegisterSystem(), std::move(rounds));

    // The simulator runs the same wrapper and hands the flipped value to F.
    auto pre = wrapper("Kv", "Kw", "Kf", labels::Vt);
    auto post = classical_isometry(RegisterSystem({{"Kv", m}, {"Kw", m}, {"Kf", records}, {labels::Yt, 2}}),
                                   RegisterSystem({{labels::V, m}, {"Vw", m}, {"Fl", records}, {labels::Yc, 2}, {labels::Y, 2}}),
                                   [](const Digits& d) { return Digits{d[0], d[1], d[2], d[3], d[3]}; });
    return Fixture{"disj-perturbed-n" + std::to_string(n), f, std::move(protocol),
                   IdealAdversary{std::move(pre), std::move(post)}, std::nullopt, std::nullopt, 0.0,
                   "Reveal protocol for DISJ; Bob flips floor(sqrt n) one-bits of heavy inputs first."};
}

DisjCorrectnessReport disj_correctness_enumeration(std::size_t n) {
    if (n == 0 || n > 12) throw InvalidArgument("DISJ enumeration supports 1 ≤ n ≤ 12");
    const std::size_t m = std::size_t{1} << n;
    double worst = 0.0;
    linalg::KahanSum mean, fid;
    const double w = 1.0 / static_cast<double>(m * m);
    for (std::size_t v = 0; v < m; ++v) {
        const auto masks = disj_flip_masks(n, v);
        for (std::size_t u = 0; u < m; ++u) {
            double err = 0.0;
            if (!masks.empty()) {
                const bool truth = (u & v) == 0;
                std::size_t wrong = 0;
                for (auto mask : masks) wrong += (((u & (v ^ mask)) == 0) != truth);
                err = static_cast<double>(wrong) / static_cast<double>(masks.size());
            }
            worst = std::max(worst, err);
            mean.add(w * err);
            fid.add(w * std::sqrt(1.0 - err));
        }
    }
    const double f = std::min(1.0, fid.value());
    return {n, isqrt(n), worst, mean.value(), std::sqrt(std::max(0.0, 1.0 - f * f))};
}

// ---------------------------------------------------------------------------
// Two-copies simulator

TwoCopiesReport two_copies_simulator_check(std::size_t n, bool hadamard) {
    if (n != 1) throw InvalidArgument("two-copies check is implemented for n = 1");
    const auto f = make_function(FunctionKind::OT_LIKE, n);
    const auto m = static_cast<Eigen::Index>(std::size_t{1} << n);
    const auto nu = m * m;
    const auto no = 2 * m;
    const auto rho = DensityOperator(input_state(JointDistribution::uniform(static_cast<std::size_t>(nu), 2)));

    // Columns are measurement vectors on the s0 half of U.
    const Mat comp = Mat::Identity(m, m);
    const Mat second = hadamard ? hadamard_transform(n) : comp;
    auto projector = [&](const Mat& basis, Eigen::Index a) {
        return kron(basis.col(a) * basis.col(a).adjoint(), Mat::Identity(m, m));
    };
    auto unit = [](Eigen::Index size, Eigen::Index i) {
        Mat e = Mat::Zero(size, 1);
        e(i, 0) = 1.0;
        return e;
    };
    const auto u_reg = Register{labels::U, static_cast<std::size_t>(nu)};

    // Real attacker: told b, measures s0 in the b-dependent basis and
    // returns the outcome a as s_b; both parties then hold (b, a).
    std::vector<Mat> real_kraus;
    for (Eigen::Index a = 0; a < m; ++a) {
        Mat k = Mat::Zero(nu * 2 * no * no, nu * 2);
        for (Eigen::Index b = 0; b < 2; ++b) {
            const Mat& basis = b == 0 ? comp : second;
            const auto x = b * m + a;
            k += kron(kron(projector(basis, a), unit(2, b) * unit(2, b).transpose()), unit(no * no, x * no + x));
        }
        real_kraus.push_back(std::move(k));
    }
    const QuantumChannel attack(RegisterSystem({u_reg, {labels::V, 2}}),
                                RegisterSystem({u_reg, {labels::V, 2}, {labels::X, static_cast<std::size_t>(no)},
                                                {labels::Y, static_cast<std::size_t>(no)}}),
                                std::move(real_kraus));
    const std::vector<std::string> keep{labels::R, labels::X, labels::Y};
    const auto real = reorder(partial_trace(apply_channel(attack, rho), keep), keep);

    // Simulator: one copy answers for b = 0, one for b = 1, run one after
    // the other on the single U; F then releases the copy matching b.
    auto measure_into = [&](const Mat& basis, const std::string& target) {
        std::vector<Mat> kraus;
        for (Eigen::Index a = 0; a < m; ++a) kraus.push_back(kron(projector(basis, a), unit(m, a)));
        return QuantumChannel(RegisterSystem({u_reg}),
                              RegisterSystem({u_reg, {target, static_cast<std::size_t>(m)}}), std::move(kraus));
    };
    auto ideal = apply_channel(measure_into(comp, "A0"), rho);
    ideal = apply_channel(measure_into(second, "A1"), ideal);
    ideal = apply_channel(classical_isometry(RegisterSystem({{"A0", static_cast<std::size_t>(m)}, {"A1", static_cast<std::size_t>(m)}}),
                                             RegisterSystem({{"Ut", static_cast<std::size_t>(nu)}}),
                                             [m](const Digits& d) { return Digits{d[0] * static_cast<std::size_t>(m) + d[1]}; }),
                          ideal);
    ideal = apply_channel(functionality_channel(f, false, "Ut", labels::V), ideal);
    ideal = apply_channel(QuantumChannel::relabel(RegisterSystem({{labels::Yt, static_cast<std::size_t>(no)}}),
                                                  RegisterSystem({{labels::Y, static_cast<std::size_t>(no)}})),
                          ideal);
    ideal = reorder(partial_trace(ideal, keep), keep);

    return {total_variation(marginal_distribution(real, keep), marginal_distribution(ideal, keep)),
            purified_distance(real, ideal)};
}

// ---------------------------------------------------------------------------
// Catalog

std::vector<CatalogEntry> fixture_catalog() {
    std::vector<CatalogEntry> out;
    for (const char* fn : {"eq", "ip", "disj", "const"})
        for (int n : {1, 2})
            out.push_back({std::string("reveal-") + fn + "-n" + std::to_string(n),
                           std::string("classical reveal protocol for ") + fn + " on " + std::to_string(n) + "-bit inputs"});
    out.push_back({"reveal-ot-n1", "classical reveal protocol for the OT-like function, n = 1"});
    out.push_back({"appendix-n1", "b / s_b exchange for the OT-like function, n = 1"});
    out.push_back({"appendix-n2", "b / s_b exchange for the OT-like function, n = 2 (construction only)"});
    out.push_back({"disj-perturbed-n2", "reveal protocol for DISJ with Bob's bit-flip wrapper, n = 2"});
    return out;
}

Fixture make_fixture(const std::string& id) {
    static const std::regex reveal_re(R"(reveal-(eq|ip|disj|const|ot)-n([0-9]+))");
    static const std::regex appendix_re(R"(appendix-n([0-9]+))");
    static const std::regex disj_re(R"(disj-perturbed-n([0-9]+))");
    std::smatch match;
    if (std::regex_match(id, match, reveal_re))
        return classical_reveal_protocol(make_function(parse_function_kind(match[1]), std::stoul(match[2])));
    if (std::regex_match(id, match, appendix_re)) return appendix_protocol(std::stoul(match[1]));
    if (std::regex_match(id, match, disj_re)) return disj_perturbed_fixture(std::stoul(match[1]));
    throw InvalidArgument("unknown fixture id '" + id + "'");
}

}  // namespace qlab
