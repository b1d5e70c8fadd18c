#include "dacl/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dacl {

double cosine_sim(std::span<const double> u, std::span<const double> v) {
    require(u.size() == v.size(), "cosine_sim: length mismatch");
    double nu = norm2(u), nv = norm2(v);
    require(nu > 0.0 && nv > 0.0, "cosine_sim: zero vector");
    return dot(u, v) / (nu * nv);
}

double softplus(double q) {
    if (q > 0.0) return q + std::log1p(std::exp(-q));
    return std::log1p(std::exp(q));
}

double logistic(double q) {
    if (q >= 0.0) return 1.0 / (1.0 + std::exp(-q));
    double e = std::exp(q);
    return e / (1.0 + e);
}

double logistic_deriv(double q) {
    double p = logistic(q);
    return p * (1.0 - p);
}

double binary_xent(double q, int y) {
    require(y == 0 || y == 1, "binary_xent: label not in {0,1}");
    return softplus(q) - static_cast<double>(y) * q;
}

NtXentResult nt_xent(const Matrix& z, double tau) {
    require(tau > 0.0, "nt_xent: temperature must be positive");
    const std::size_t two_n = z.rows();
    require(two_n >= 2 && two_n % 2 == 0, "nt_xent: row count must be even and >= 2");
    const std::size_t p = z.cols();

    std::vector<double> norms(two_n);
    Matrix zhat(two_n, p);
    for (std::size_t i = 0; i < two_n; ++i) {
        double n = norm2(z.row(i));
        require(n > 0.0, "nt_xent: zero-norm row " + std::to_string(i));
        norms[i] = n;
        for (std::size_t j = 0; j < p; ++j) zhat(i, j) = z(i, j) / n;
    }

    Matrix s = matmul_bt(zhat, zhat); // cosine similarities

    auto partner = [](std::size_t i) { return i ^ 1ull; };

    // dL/dS accumulated over ordered (i, k), k != i.
    Matrix ds(two_n, two_n);
    std::vector<double> expv(two_n);
    double loss = 0.0;
    const double inv = 1.0 / static_cast<double>(two_n);
    for (std::size_t i = 0; i < two_n; ++i) {
        double mx = -1e300;
        for (std::size_t k = 0; k < two_n; ++k)
            if (k != i) mx = std::max(mx, s(i, k) / tau);
        double denom = 0.0;
        for (std::size_t k = 0; k < two_n; ++k) {
            expv[k] = k != i ? std::exp(s(i, k) / tau - mx) : 0.0;
            denom += expv[k];
        }
        double log_denom = mx + std::log(denom);
        loss += inv * (log_denom - s(i, partner(i)) / tau);
        const double soft_scale = inv / tau / denom;
        for (std::size_t k = 0; k < two_n; ++k) {
            if (k == i) continue;
            ds(i, k) = soft_scale * expv[k] - (k == partner(i) ? inv / tau : 0.0);
        }
    }

    // S = Zhat Zhat^T  =>  dL/dZhat = (dS + dS^T) Zhat.
    Matrix g = matmul(add(ds, transpose(ds)), zhat);

    // Through the normalization: dz = (g - (g . zhat) zhat) / |z|.
    Matrix dz(two_n, p);
    for (std::size_t i = 0; i < two_n; ++i) {
        double proj = dot(g.row(i), zhat.row(i));
        for (std::size_t j = 0; j < p; ++j)
            dz(i, j) = (g(i, j) - proj * zhat(i, j)) / norms[i];
    }
    return {loss, std::move(dz)};
}

SoftmaxXentResult softmax_xent(const Matrix& logits, std::span<const int> labels) {
    const std::size_t b = logits.rows();
    const std::size_t c = logits.cols();
    require(labels.size() == b, "softmax_xent: label count mismatch");
    for (std::size_t i = 0; i < b; ++i)
        require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < c,
                "softmax_xent: label out of range at row " + std::to_string(i));

    Matrix dl(b, c);
    double loss = 0.0;
    const double inv = 1.0 / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
        double mx = logits(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits(i, j));
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j) denom += std::exp(logits(i, j) - mx);
        double log_denom = mx + std::log(denom);
        loss += inv * (log_denom - logits(i, static_cast<std::size_t>(labels[i])));
        for (std::size_t j = 0; j < c; ++j) {
            double soft = std::exp(logits(i, j) - log_denom);
            dl(i, j) = inv * (soft - (static_cast<std::size_t>(labels[i]) == j ? 1.0 : 0.0));
        }
    }
    return {loss, std::move(dl)};
}

} // namespace dacl
