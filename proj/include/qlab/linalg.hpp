#pragma once

#include "qlab/qcore.hpp"

namespace qlab::linalg {

struct HermitianEigen {
    RealVec values;  // ascending
    Mat vectors;     // columns
};

/// Eigendecomposition of a Hermitian matrix.  The matrix is split into the
/// connected components of its sparsity pattern (entries below 1e-14·max|a|
/// count as zero) and each block is diagonalised separately.
HermitianEigen hermitian_eigen(const Mat& a);

/// Principal square root; eigenvalues below 1e-14 are treated as zero.
Mat sqrt_psd(const Mat& a);

/// Number of eigenvalues above `tol`.
std::size_t numerical_rank(const RealVec& eigenvalues, double tol = 1e-12);

/// Columns spanning the orthogonal complement of the columns of `basis`
/// (which must be orthonormal).
Mat orthogonal_complement(const Mat& basis);

double hermiticity_defect(const Mat& a);

/// Neumaier-compensated sum.
class KahanSum {
public:
    void add(double x);
    double value() const { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

}  // namespace qlab::linalg
