#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "dacl/errors.hpp"

namespace dacl {

// Dense row-major matrix of 64-bit floats. Values are immutable by convention
// once handed to other modules; all library code copies instead of aliasing.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Matrix from_row(std::span<const double> row);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    bool all_finite() const;

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Standard product. Per-element accumulation runs in ascending inner index, so
// results are reproducible and (A*B)^T == B^T * A^T holds exactly. With the
// process thread budget > 1 the rows of the output are computed in parallel;
// each element still sees the identical summation order, so the threaded path
// is bit-identical to the sequential one.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

// a^T * b without materializing the transpose; inner index runs over a's rows.
Matrix matmul_at(const Matrix& a, const Matrix& b);
// a * b^T without materializing the transpose; inner index runs over columns.
Matrix matmul_bt(const Matrix& a, const Matrix& b);

// c = a + b, c = a - b, elementwise; shapes must agree.
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);

double dot(std::span<const double> u, std::span<const double> v);
double norm2(std::span<const double> v);

// Process-wide worker count for matmul (1 = sequential reference). Set once at
// startup from DACL_THREADS by the CLI; defaults to 1.
void set_thread_budget(int n);
int thread_budget();

} // namespace dacl
