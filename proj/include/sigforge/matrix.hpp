#pragma once

#include <cstddef>
#include <vector>

namespace sigforge {

/// Row-major dense matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(size_t rows, size_t cols, double value = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, value) {}

    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(size_t i, size_t j) { return data_[i * cols_ + j]; }
    double operator()(size_t i, size_t j) const { return data_[i * cols_ + j]; }

    double* row(size_t i) { return data_.data() + i * cols_; }
    const double* row(size_t i) const { return data_.data() + i * cols_; }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

private:
    size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

// All products accumulate each output element in a fixed serial order;
// any parallelism is across disjoint output rows, so results are
// bit-identical regardless of thread count.
Matrix matmul(const Matrix& a, const Matrix& b);     // a (m x n) * b (n x k)
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T

Matrix transpose(const Matrix& a);
void add_row_broadcast(Matrix& m, const std::vector<double>& row);
void hadamard_inplace(Matrix& m, const Matrix& other);
void scale_inplace(Matrix& m, double factor);
std::vector<double> column_sums(const Matrix& m);
Matrix gather_rows(const Matrix& m, const std::vector<size_t>& idx, size_t offset, size_t count);
bool all_finite(const Matrix& m);

}  // namespace sigforge
