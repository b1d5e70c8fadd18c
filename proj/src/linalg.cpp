#include "dacl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dacl {

SymEig sym_eig(const Matrix& a) {
    require(a.rows() == a.cols(), "sym_eig: matrix not square");
    const std::size_t n = a.rows();
    Matrix d = a;
    Matrix v = Matrix::identity(n);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                off += d(p, q) * d(p, q);
        if (off < 1e-30) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = d(p, q);
                if (apq == 0.0) continue;
                double app = d(p, p), aqq = d(q, q);
                double theta = (aqq - app) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    double dkp = d(k, p), dkq = d(k, q);
                    d(k, p) = c * dkp - s * dkq;
                    d(k, q) = s * dkp + c * dkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double dpk = d(p, k), dqk = d(q, k);
                    d(p, k) = c * dpk - s * dqk;
                    d(q, k) = s * dpk + c * dqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = d(i, i);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return diag[i] > diag[j]; });

    SymEig out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = diag[order[j]];
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

int eig_rank(const SymEig& eig, double rel_cutoff) {
    double lmax = 0.0;
    for (double l : eig.values) lmax = std::max(lmax, std::abs(l));
    if (lmax == 0.0) return 0;
    int r = 0;
    for (double l : eig.values)
        if (l > rel_cutoff * lmax) ++r;
    return r;
}

Matrix pinv_sqrt(const SymEig& eig, double rel_cutoff) {
    const std::size_t n = eig.values.size();
    double lmax = 0.0;
    for (double l : eig.values) lmax = std::max(lmax, std::abs(l));
    double cut = rel_cutoff * lmax;
    Matrix scaled(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double f = eig.values[j] > cut ? 1.0 / std::sqrt(eig.values[j]) : 0.0;
        for (std::size_t i = 0; i < n; ++i) scaled(i, j) = eig.vectors(i, j) * f;
    }
    return matmul(scaled, transpose(eig.vectors));
}

Matrix second_moment(const Matrix& x) {
    require(x.rows() >= 1, "second_moment: empty matrix");
    Matrix s = matmul(transpose(x), x);
    return scale(s, 1.0 / static_cast<double>(x.rows()));
}

std::vector<double> singular_values(const Matrix& x) {
    require(x.rows() >= 1 && x.cols() >= 1, "singular_values: empty matrix");
    Matrix a = x;  // columns get orthogonalized in place
    const std::size_t n = a.rows(), d = a.cols();
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    app += a(i, p) * a(i, p);
                    aqq += a(i, q) * a(i, q);
                    apq += a(i, p) * a(i, q);
                }
                if (std::abs(apq) <= 1e-15 * std::sqrt(app * aqq) || apq == 0.0) continue;
                rotated = true;
                double zeta = (aqq - app) / (2.0 * apq);
                double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(zeta) + std::sqrt(zeta * zeta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
            }
        }
        if (!rotated) break;
    }
    std::vector<double> sv(d);
    for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a(i, j) * a(i, j);
        sv[j] = std::sqrt(s);
    }
    std::sort(sv.begin(), sv.end(), std::greater<double>());
    return sv;
}

} // namespace dacl
