#pragma once

#include <span>

#include "dacl/matrix.hpp"

namespace dacl {

// z_i . z_j / (|z_i| |z_j|); both vectors must be nonzero.
double cosine_sim(std::span<const double> u, std::span<const double> v);

struct NtXentResult {
    double loss = 0.0;
    Matrix dz; // dL/dZ, same shape as Z
};

// Normalized temperature-scaled cross entropy over a batch of 2N projection
// rows, where rows (2k, 2k+1) [0-based] are the positive pair of anchor k.
//   l(i,j) = -log( exp(s_ij/tau) / sum_{k != i} exp(s_ik/tau) )
//   loss   = (1/2N) sum_k [ l(2k, 2k+1) + l(2k+1, 2k) ]
// Log-sum-exp is computed with max subtraction. Gradient is exact, including
// through the row normalizations.
NtXentResult nt_xent(const Matrix& z, double tau);

struct SoftmaxXentResult {
    double loss = 0.0;
    Matrix dlogits;
};

// Mean cross-entropy over rows; labels in [0, C). Stabilized; exact gradient.
SoftmaxXentResult softmax_xent(const Matrix& logits, std::span<const int> labels);

// Binary cross-entropy of a logit: -log( exp(y q) / (1 + exp(q)) ), y in {0,1}.
// Computed as softplus(q) - y q with a branchless-stable softplus.
double binary_xent(double q, int y);

// log(1 + exp(q)) without overflow.
double softplus(double q);

// Logistic function and its derivative.
double logistic(double q);
double logistic_deriv(double q);

} // namespace dacl
