#pragma once

// Random instances and brute-force references shared by the test suites.

#include <random>

#include "qlab/qcore.hpp"

namespace qlab::testing {

inline Vec random_vector(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> g;
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(g(rng), g(rng));
    return v.normalized();
}

inline Mat random_gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> g;
    Mat m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = cplx(g(rng), g(rng));
    return m;
}

/// Haar-distributed isometry rows×cols (rows ≥ cols) via QR with phase fix.
inline Mat haar_isometry(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    const Mat g = random_gaussian(rng, rows, cols);
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ() * Mat::Identity(rows, cols);
    const Mat r = qr.matrixQR().topLeftCorner(cols, cols);
    for (Eigen::Index k = 0; k < cols; ++k) {
        const cplx d = r(k, k);
        if (std::abs(d) > 0) q.col(k) *= d / std::abs(d);
    }
    return q;
}

inline RegisterSystem single(const std::string& label, std::size_t dim) { return RegisterSystem({{label, dim}}); }

inline PureState random_pure(std::mt19937_64& rng, const RegisterSystem& sys) {
    return PureState(sys, random_vector(rng, static_cast<Eigen::Index>(sys.dim())));
}

/// Random density operator of the given rank (Wishart-type).
inline DensityOperator random_density(std::mt19937_64& rng, const RegisterSystem& sys, Eigen::Index rank) {
    const Mat g = random_gaussian(rng, static_cast<Eigen::Index>(sys.dim()), rank);
    Mat rho = g * g.adjoint();
    rho /= rho.trace().real();
    return DensityOperator(sys, 0.5 * (rho + rho.adjoint()));
}

/// Random channel with nk Kraus operators, from a Haar isometry split into blocks.
inline QuantumChannel random_channel(std::mt19937_64& rng, const RegisterSystem& in, const RegisterSystem& out,
                                     Eigen::Index nk) {
    const auto di = static_cast<Eigen::Index>(in.dim());
    const auto dout = static_cast<Eigen::Index>(out.dim());
    const Mat v = haar_isometry(rng, dout * nk, di);
    std::vector<Mat> kraus;
    for (Eigen::Index k = 0; k < nk; ++k) kraus.push_back(v.middleRows(k * dout, dout));
    return QuantumChannel(in, out, kraus);
}

/// Partial trace by explicit digit enumeration.
inline Mat brute_partial_trace(const Operator& op, const std::vector<std::string>& keep) {
    const auto kept = op.system.subsystem(keep);
    const auto d = op.system.dim();
    Mat out = Mat::Zero(static_cast<Eigen::Index>(kept.dim()), static_cast<Eigen::Index>(kept.dim()));
    for (std::size_t i = 0; i < d; ++i) {
        const auto di = op.system.digits(i);
        for (std::size_t j = 0; j < d; ++j) {
            const auto dj = op.system.digits(j);
            bool traced_equal = true;
            std::vector<std::size_t> ki, kj;
            for (std::size_t r = 0; r < op.system.size(); ++r) {
                const auto& label = op.system.registers()[r].label;
                if (kept.contains(label)) {
                    ki.push_back(di[r]);
                    kj.push_back(dj[r]);
                } else if (di[r] != dj[r]) {
                    traced_equal = false;
                }
            }
            if (traced_equal)
                out(static_cast<Eigen::Index>(kept.index(ki)), static_cast<Eigen::Index>(kept.index(kj))) +=
                    op.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
    }
    return out;
}

inline double max_abs_diff(const Mat& a, const Mat& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace qlab::testing
