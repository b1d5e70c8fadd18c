#include "dacl/matrix.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <thread>

namespace dacl {

namespace {
std::atomic<int> g_thread_budget{1};
} // namespace

void set_thread_budget(int n) { g_thread_budget.store(n < 1 ? 1 : n); }
int thread_budget() { return g_thread_budget.load(); }

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    std::size_t r = rows.size();
    std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        require(row.size() == c, "Matrix::from_rows: ragged rows");
        std::size_t j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

Matrix Matrix::from_row(std::span<const double> row) {
    Matrix m(1, row.size());
    std::memcpy(m.data(), row.data(), row.size() * sizeof(double));
    return m;
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

namespace {

constexpr std::size_t kRowTile = 4;
constexpr std::size_t kColTile = 8;

// Packed-panel product. A is packed as 4-row panels (column-major within the
// panel), B as 8-column panels (row-major within the panel); both are padded
// with zeros to full tiles, so every output element runs through the identical
// microkernel with k ascending. That fixes the per-element summation order:
// results are reproducible, independent of the row split across threads, and
// (A*B)^T == B^T * A^T holds exactly.
void gemm_panels(const double* ap, const double* bp, double* C,
                 std::size_t ib0, std::size_t ib1, std::size_t m, std::size_t k, std::size_t n,
                 std::size_t nb) {
    for (std::size_t ib = ib0; ib < ib1; ib += kRowTile) {
        const double* a_panel = ap + ib * k;
        const std::size_t rows = std::min(kRowTile, m - ib);
        for (std::size_t jb = 0; jb < nb; jb += kColTile) {
            const double* b_panel = bp + jb * k;
            double acc[kRowTile][kColTile] = {};
            for (std::size_t p = 0; p < k; ++p) {
                const double* bv = b_panel + p * kColTile;
                const double* av = a_panel + p * kRowTile;
                for (std::size_t r = 0; r < kRowTile; ++r) {
                    double x = av[r];
                    for (std::size_t t = 0; t < kColTile; ++t) acc[r][t] += x * bv[t];
                }
            }
            const std::size_t cols = std::min(kColTile, n - jb);
            for (std::size_t r = 0; r < rows; ++r)
                std::memcpy(C + (ib + r) * n + jb, acc[r], cols * sizeof(double));
        }
    }
}

} // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.rows(), "matmul: inner dimensions disagree");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Matrix c(m, n);
    if (m == 0 || n == 0) return c;
    if (k == 0) return c;

    const std::size_t mb = (m + kRowTile - 1) / kRowTile * kRowTile;
    const std::size_t nb = (n + kColTile - 1) / kColTile * kColTile;
    std::vector<double> ap(mb * k, 0.0), bp(nb * k, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* src = a.data() + i * k;
        double* dst = ap.data() + (i / kRowTile) * kRowTile * k + (i % kRowTile);
        for (std::size_t p = 0; p < k; ++p) dst[p * kRowTile] = src[p];
    }
    for (std::size_t jb = 0; jb < nb; jb += kColTile) {
        double* dst = bp.data() + jb * k;
        const std::size_t cols = std::min(kColTile, n - jb);
        for (std::size_t p = 0; p < k; ++p)
            std::memcpy(dst + p * kColTile, b.data() + p * n + jb, cols * sizeof(double));
    }

    int workers = thread_budget();
    const std::size_t panels = mb / kRowTile;
    if (workers > 1 && panels >= 8 && k * n >= 4096) {
        std::size_t nthreads = std::min<std::size_t>(workers, panels);
        std::vector<std::thread> pool;
        pool.reserve(nthreads - 1);
        std::size_t chunk = (panels + nthreads - 1) / nthreads * kRowTile;
        for (std::size_t t = 1; t < nthreads; ++t) {
            std::size_t lo = t * chunk;
            std::size_t hi = std::min(mb, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(gemm_panels, ap.data(), bp.data(), c.data(), lo, hi, m, k, n, nb);
        }
        gemm_panels(ap.data(), bp.data(), c.data(), 0, std::min(mb, chunk), m, k, n, nb);
        for (auto& th : pool) th.join();
    } else {
        gemm_panels(ap.data(), bp.data(), c.data(), 0, mb, m, k, n, nb);
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            t(j, i) = a(i, j);
    return t;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
    require(a.rows() == b.rows(), "matmul_at: row counts disagree");
    return matmul(transpose(a), b);
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.cols(), "matmul_bt: column counts disagree");
    return matmul(a, transpose(b));
}

Matrix add(const Matrix& a, const Matrix& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
    return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "hadamard: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= b.data()[i];
    return c;
}

Matrix scale(const Matrix& a, double s) {
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= s;
    return c;
}

double dot(std::span<const double> u, std::span<const double> v) {
    require(u.size() == v.size(), "dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

double norm2(std::span<const double> v) {
    return std::sqrt(dot(v, v));
}

} // namespace dacl
