#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace privsnn {

/// Dense row-major matrix of doubles. The universal numeric carrier.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // rows * cols, row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const double& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
};

// c = a * b. Throws ShapeError when a.cols != b.rows.
Matrix matmul(const Matrix& a, const Matrix& b);

// c = a^T * b without materializing the transpose (a is k x m, b is k x n).
Matrix matmul_transpose_a(const Matrix& a, const Matrix& b);

// c = a * b^T (a is m x k, b is n x k).
Matrix matmul_transpose_b(const Matrix& a, const Matrix& b);

// Numerically stable softmax (max-subtraction). Output sums to 1.
std::vector<double> softmax(std::span<const double> z);

// In-place row-wise softmax.
void softmax_rows(Matrix& m);

// log(sum_i exp(z_i)), max-shifted.
double log_sum_exp(std::span<const double> z);

bool all_finite(const Matrix& m);
bool all_finite(std::span<const double> v);

double l2_norm(std::span<const double> v);

}  // namespace privsnn
