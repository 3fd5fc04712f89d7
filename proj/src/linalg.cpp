#include "qlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qlab::linalg {

namespace {

struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

HermitianEigen hermitian_eigen(const Mat& a) {
    const auto n = static_cast<std::size_t>(a.rows());
    HermitianEigen out{RealVec::Zero(a.rows()), Mat::Zero(a.rows(), a.cols())};
    if (n == 0) return out;

    const double cutoff = 1e-14 * a.cwiseAbs().maxCoeff();
    DisjointSets sets(n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = j + 1; i < n; ++i)
            if (std::abs(a(i, j)) > cutoff || std::abs(a(j, i)) > cutoff) sets.unite(i, j);

    std::vector<std::vector<std::size_t>> blocks;
    std::vector<std::size_t> block_of(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto root = sets.find(i);
        if (block_of[root] == n) {
            block_of[root] = blocks.size();
            blocks.emplace_back();
        }
        blocks[block_of[root]].push_back(i);
    }

    // Collect (value, global column) pairs, then sort ascending.
    std::vector<std::pair<double, Vec>> pairs;
    pairs.reserve(n);
    for (const auto& idx : blocks) {
        const auto m = static_cast<Eigen::Index>(idx.size());
        Mat sub(m, m);
        for (Eigen::Index r = 0; r < m; ++r)
            for (Eigen::Index c = 0; c < m; ++c) sub(r, c) = a(idx[r], idx[c]);
        Eigen::SelfAdjointEigenSolver<Mat> solver(sub);
        if (solver.info() != Eigen::Success) throw NumericsFault("Hermitian eigensolver failed");
        for (Eigen::Index k = 0; k < m; ++k) {
            Vec col = Vec::Zero(static_cast<Eigen::Index>(n));
            for (Eigen::Index r = 0; r < m; ++r) col(idx[r]) = solver.eigenvectors()(r, k);
            pairs.emplace_back(solver.eigenvalues()(k), std::move(col));
        }
    }
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    for (std::size_t k = 0; k < n; ++k) {
        out.values(k) = pairs[k].first;
        out.vectors.col(k) = pairs[k].second;
    }
    return out;
}

Mat sqrt_psd(const Mat& a) {
    const auto eig = hermitian_eigen(a);
    // Eigenvalues below 1e-14 are roundoff on an exactly singular state.
    const RealVec roots = eig.values.unaryExpr([](double x) { return x < 1e-14 ? 0.0 : std::sqrt(x); });
    return eig.vectors * roots.cast<cplx>().asDiagonal() * eig.vectors.adjoint();
}

std::size_t numerical_rank(const RealVec& eigenvalues, double tol) {
    return static_cast<std::size_t>((eigenvalues.array() > tol).count());
}

Mat orthogonal_complement(const Mat& basis) {
    const auto n = basis.rows();
    const auto k = basis.cols();
    if (k >= n) return Mat(n, 0);
    if (k == 0) return Mat::Identity(n, n);
    Eigen::HouseholderQR<Mat> qr(basis);
    Mat q = qr.householderQ() * Mat::Identity(n, n);
    return q.rightCols(n - k);
}

double hermiticity_defect(const Mat& a) {
    if (a.size() == 0) return 0.0;
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

void KahanSum::add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
        compensation_ += (sum_ - t) + x;
    else
        compensation_ += (x - t) + sum_;
    sum_ = t;
}

}  // namespace qlab::linalg
