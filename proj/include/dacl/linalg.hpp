#pragma once

#include "dacl/matrix.hpp"

namespace dacl {

// Eigendecomposition of a symmetric matrix: a == vectors * diag(values) * vectors^T,
// values descending, vectors orthonormal in columns.
struct SymEig {
    std::vector<double> values;
    Matrix vectors;
};

// Cyclic Jacobi rotations; adequate and robust at desk-scale dimensions.
SymEig sym_eig(const Matrix& a);

// Number of eigenvalues above rel_cutoff * max(|lambda|).
int eig_rank(const SymEig& eig, double rel_cutoff);

// Pseudo-inverse square root: vectors * diag(lambda > cut ? 1/sqrt(lambda) : 0) * vectors^T.
Matrix pinv_sqrt(const SymEig& eig, double rel_cutoff);

// Empirical second-moment matrix (1/n) X^T X of the rows of X.
Matrix second_moment(const Matrix& x);

// Singular values of x, descending, via one-sided Jacobi (Hestenes) rotations.
// Works directly on x, so tiny singular values keep full relative resolution
// instead of the sqrt(eps) floor of the Gram-matrix route.
std::vector<double> singular_values(const Matrix& x);

} // namespace dacl
