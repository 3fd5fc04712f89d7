#include <algorithm>
#include <cmath>
#include <random>

#include "qlab/qcore.hpp"
#include "runner.hpp"

namespace lab {

namespace {

using qlab::cplx;
using qlab::Mat;

Mat gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> g;
    Mat m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = cplx(g(rng), g(rng));
    return m;
}

qlab::DensityOperator random_state(std::mt19937_64& rng, const qlab::RegisterSystem& sys, Eigen::Index rank) {
    const Mat g = gaussian(rng, static_cast<Eigen::Index>(sys.dim()), rank);
    Mat rho = g * g.adjoint();
    rho /= rho.trace().real();
    return qlab::DensityOperator(sys, 0.5 * (rho + rho.adjoint()));
}

qlab::QuantumChannel random_channel(std::mt19937_64& rng, const qlab::RegisterSystem& in,
                                    const qlab::RegisterSystem& out, Eigen::Index nk) {
    const auto di = static_cast<Eigen::Index>(in.dim()), dout = static_cast<Eigen::Index>(out.dim());
    Eigen::HouseholderQR<Mat> qr(gaussian(rng, dout * nk, di));
    const Mat v = qr.householderQ() * Mat::Identity(dout * nk, di);
    std::vector<Mat> kraus;
    for (Eigen::Index k = 0; k < nk; ++k) kraus.push_back(v.middleRows(k * dout, dout));
    return qlab::QuantumChannel(in, out, kraus);
}

Mat psd_sqrt(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m);
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

// tr √(√ρ σ √ρ) by eigendecomposition.
double eigen_fidelity(const Mat& rho, const Mat& sigma) {
    const Mat s = psd_sqrt(rho);
    const Mat inner = s * sigma * s;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (inner + inner.adjoint()));
    double f = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) f += std::sqrt(std::max(0.0, es.eigenvalues()(i)));
    return std::min(1.0, f);
}

}  // namespace

SelftestReport qcore_selftest(std::uint64_t seed, std::size_t instances) {
    SelftestReport rep{instances, 0, {}, {}, {}};
    std::mt19937_64 rng(seed);
    auto record = [&](const std::string& name, double err, double tol, std::size_t instance) {
        rep.tolerance[name] = tol;
        auto& worst = rep.worst_error[name];
        worst = std::max(worst, err);
        if (!(err <= tol)) {
            ++rep.failures;
            if (rep.messages.size() < 20)
                rep.messages.push_back(name + " instance " + std::to_string(instance) + ": error " + format_number(err));
        }
    };

    for (std::size_t i = 0; i < instances; ++i) {
        std::uniform_int_distribution<std::size_t> dim(2, 4);
        const std::size_t da = dim(rng), de = dim(rng);
        const auto ra = static_cast<Eigen::Index>(std::uniform_int_distribution<std::size_t>(1, da)(rng));
        const auto rb = static_cast<Eigen::Index>(std::uniform_int_distribution<std::size_t>(1, std::min(da, de))(rng));
        const qlab::RegisterSystem a({{"A", da}});
        const auto rho = random_state(rng, a, ra);
        const auto sigma = random_state(rng, a, rb);

        // fidelity
        const double f = qlab::fidelity(rho, sigma);
        record("fidelity_vs_eigen", std::abs(f - eigen_fidelity(rho.matrix(), sigma.matrix())), 1e-7, i);
        record("fidelity_symmetry", std::abs(f - qlab::fidelity(sigma, rho)), 1e-9, i);
        record("fidelity_self", std::abs(qlab::fidelity(rho, rho) - 1.0), 1e-9, i);
        const double pd = qlab::purified_distance(rho, sigma);
        record("purified_distance_identity", std::abs(pd * pd + f * f - 1.0), 1e-9, i);
        const double tv = qlab::total_variation(qlab::marginal_distribution(rho, {"A"}),
                                                qlab::marginal_distribution(sigma, {"A"}));
        record("purified_distance_bounds_tv", std::max(0.0, tv - pd), 1e-9, i);

        // purification round trip
        const auto phi = qlab::purify(rho, "E");
        record("purification_norm", std::abs(phi.amplitudes().norm() - 1.0), 1e-9, i);
        record("purification_round_trip",
               (qlab::partial_trace(phi, {"A"}).matrix() - rho.matrix()).cwiseAbs().maxCoeff(), 1e-9, i);

        // channel trace preservation
        const qlab::RegisterSystem b({{"B", de}});
        const auto nk = static_cast<Eigen::Index>(dim(rng));
        const auto ch = random_channel(rng, a, b, nk);
        Mat completeness = Mat::Zero(static_cast<Eigen::Index>(da), static_cast<Eigen::Index>(da));
        for (const auto& k : ch.kraus()) completeness += k.adjoint() * k;
        record("kraus_completeness",
               (completeness - Mat::Identity(static_cast<Eigen::Index>(da), static_cast<Eigen::Index>(da)))
                   .cwiseAbs()
                   .maxCoeff(),
               1e-9, i);
        record("channel_trace", std::abs(qlab::apply_channel(ch, rho).matrix().trace().real() - 1.0), 1e-9, i);

        // Uhlmann optimality: the returned isometry achieves the fidelity
        const auto psi = qlab::purify(sigma, "F", de);
        const auto u = qlab::uhlmann_isometry(phi, psi, {"E"}, {"F"});
        record("uhlmann_overlap", std::abs(u.overlap - f), 1e-8, i);
        record("uhlmann_pure_route", std::abs(qlab::fidelity(phi, psi, {"A"}) - f), 1e-8, i);
    }
    return rep;
}

}  // namespace lab
