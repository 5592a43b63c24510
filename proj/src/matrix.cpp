#include "sigforge/matrix.hpp"

#include <cmath>
#include <cstdint>

#include "sigforge/errors.hpp"

namespace sigforge {

namespace {

void check(bool ok, const char* what) {
    if (!ok) throw ShapeMismatch(what);
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    check(a.cols() == b.rows(), "matmul: inner dimensions differ");
    const size_t m = a.rows(), n = a.cols(), k = b.cols();
    Matrix c(m, k);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(m); ++i) {
        double* ci = c.row(static_cast<size_t>(i));
        const double* ai = a.row(static_cast<size_t>(i));
        for (size_t l = 0; l < n; ++l) {
            const double av = ai[l];
            const double* bl = b.row(l);
            for (size_t j = 0; j < k; ++j) ci[j] += av * bl[j];
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    check(a.rows() == b.rows(), "matmul_tn: row counts differ");
    const size_t m = a.cols(), n = a.rows(), k = b.cols();
    Matrix c(m, k);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(m); ++i) {
        double* ci = c.row(static_cast<size_t>(i));
        for (size_t l = 0; l < n; ++l) {
            const double av = a(l, static_cast<size_t>(i));
            const double* bl = b.row(l);
            for (size_t j = 0; j < k; ++j) ci[j] += av * bl[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    check(a.cols() == b.cols(), "matmul_nt: column counts differ");
    const size_t m = a.rows(), n = a.cols(), k = b.rows();
    Matrix c(m, k);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(m); ++i) {
        double* ci = c.row(static_cast<size_t>(i));
        const double* ai = a.row(static_cast<size_t>(i));
        for (size_t j = 0; j < k; ++j) {
            const double* bj = b.row(j);
            double sum = 0.0;
            for (size_t l = 0; l < n; ++l) sum += ai[l] * bj[l];
            ci[j] = sum;
        }
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (size_t i = 0; i < a.rows(); ++i)
        for (size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

void add_row_broadcast(Matrix& m, const std::vector<double>& row) {
    check(m.cols() == row.size(), "add_row_broadcast: width differs");
    for (size_t i = 0; i < m.rows(); ++i) {
        double* mi = m.row(i);
        for (size_t j = 0; j < row.size(); ++j) mi[j] += row[j];
    }
}

void hadamard_inplace(Matrix& m, const Matrix& other) {
    check(m.same_shape(other), "hadamard: shapes differ");
    auto& a = m.values();
    const auto& b = other.values();
    for (size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
}

void scale_inplace(Matrix& m, double factor) {
    for (double& v : m.values()) v *= factor;
}

std::vector<double> column_sums(const Matrix& m) {
    std::vector<double> sums(m.cols(), 0.0);
    for (size_t i = 0; i < m.rows(); ++i) {
        const double* mi = m.row(i);
        for (size_t j = 0; j < m.cols(); ++j) sums[j] += mi[j];
    }
    return sums;
}

Matrix gather_rows(const Matrix& m, const std::vector<size_t>& idx, size_t offset, size_t count) {
    Matrix out(count, m.cols());
    for (size_t i = 0; i < count; ++i) {
        const double* src = m.row(idx[offset + i]);
        double* dst = out.row(i);
        for (size_t j = 0; j < m.cols(); ++j) dst[j] = src[j];
    }
    return out;
}

bool all_finite(const Matrix& m) {
    for (double v : m.values())
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace sigforge
