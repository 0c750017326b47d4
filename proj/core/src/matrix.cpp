#include "pnn/matrix.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "pnn/error.hpp"

namespace pnn {

namespace {

// Contraction block size. Fixed so that the per-element summation order
// (ascending k within ascending blocks) never depends on runtime conditions.
constexpr std::size_t kBlock = 256;

void check_shape(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) {
        throw UsageError("matrix dimensions must be at least 1x1, got " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    }
}

} // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
    check_shape(rows, cols);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    check_shape(rows, cols);
    if (data_.size() != rows * cols) {
        throw UsageError("matrix data size " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows) + "x" +
                         std::to_string(cols));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
    check_shape(rows_, cols_);
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw UsageError("ragged initializer: expected " +
                             std::to_string(cols_) + " columns, got " +
                             std::to_string(r.size()));
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw UsageError("matmul shape mismatch: " + std::to_string(a.rows()) +
                         "x" + std::to_string(a.cols()) + " * " +
                         std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
    const std::size_t m = a.rows(), k_total = a.cols(), n = b.cols();
    Matrix c(m, n);
    for (std::size_t k0 = 0; k0 < k_total; k0 += kBlock) {
        const std::size_t k1 = std::min(k_total, k0 + kBlock);
        for (std::size_t i = 0; i < m; ++i) {
            double* ci = c.row_ptr(i);
            const double* ai = a.row_ptr(i);
            for (std::size_t k = k0; k < k1; ++k) {
                const double aik = ai[k];
                const double* bk = b.row_ptr(k);
                for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
            }
        }
    }
    return c;
}

Matrix matmul_transpose_a(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw UsageError("matmul_transpose_a shape mismatch: " +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         "^T * " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
    }
    const std::size_t m = a.cols(), k_total = a.rows(), n = b.cols();
    Matrix c(m, n);
    for (std::size_t k0 = 0; k0 < k_total; k0 += kBlock) {
        const std::size_t k1 = std::min(k_total, k0 + kBlock);
        for (std::size_t k = k0; k < k1; ++k) {
            const double* ak = a.row_ptr(k);
            const double* bk = b.row_ptr(k);
            for (std::size_t i = 0; i < m; ++i) {
                double* ci = c.row_ptr(i);
                const double aki = ak[i];
                for (std::size_t j = 0; j < n; ++j) ci[j] += aki * bk[j];
            }
        }
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) t.at(j, i) = a.at(i, j);
    }
    return t;
}

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b)) {
        throw UsageError(std::string(op) + " shape mismatch: " +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
    }
}

} // namespace

Matrix add(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "add");
    Matrix c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] + b.data()[i];
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "sub");
    Matrix c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] - b.data()[i];
    return c;
}

Matrix scale(const Matrix& a, double c) {
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * c;
    return out;
}

Matrix elementwise(const Matrix& a, const std::function<double(double)>& f) {
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = f(a.data()[i]);
    return out;
}

Matrix row_slice(const Matrix& a, std::size_t begin, std::size_t count) {
    if (count == 0 || begin + count > a.rows()) {
        throw UsageError("row_slice [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of range for " +
                         std::to_string(a.rows()) + " rows");
    }
    std::vector<double> data(a.row_ptr(begin), a.row_ptr(begin) + count * a.cols());
    return Matrix(count, a.cols(), std::move(data));
}

Matrix gather_rows(const Matrix& a, const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw UsageError("gather_rows needs at least one index");
    Matrix out(indices.size(), a.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= a.rows()) {
            throw UsageError("gather_rows index " + std::to_string(indices[i]) +
                             " out of range for " + std::to_string(a.rows()) + " rows");
        }
        std::memcpy(out.row_ptr(i), a.row_ptr(indices[i]), a.cols() * sizeof(double));
    }
    return out;
}

std::vector<std::size_t> argmax_rows(const Matrix& a) {
    std::vector<std::size_t> out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* row = a.row_ptr(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < a.cols(); ++j) {
            if (row[j] > row[best]) best = j;
        }
        out[i] = best;
    }
    return out;
}

Matrix col_sums_to_column(const Matrix& a) {
    Matrix out(a.cols(), 1);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* row = a.row_ptr(i);
        for (std::size_t j = 0; j < a.cols(); ++j) out.data()[j] += row[j];
    }
    return out;
}

Matrix add_row_broadcast(const Matrix& a, const Matrix& bias) {
    if (bias.cols() != 1 || bias.rows() != a.cols()) {
        throw UsageError("add_row_broadcast expects bias " + std::to_string(a.cols()) +
                         "x1, got " + std::to_string(bias.rows()) + "x" +
                         std::to_string(bias.cols()));
    }
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* src = a.row_ptr(i);
        double* dst = out.row_ptr(i);
        for (std::size_t j = 0; j < a.cols(); ++j) dst[j] = src[j] + bias.data()[j];
    }
    return out;
}

void scale_in_place(Matrix& a, double c) {
    for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] *= c;
}

void axpy_in_place(Matrix& y, double alpha, const Matrix& x) {
    check_same_shape(y, x, "axpy");
    for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] += alpha * x.data()[i];
}

bool bit_equal(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) return false;
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    }
    return m;
}

Matrix uniform(Rng& rng, double lo, double hi, std::size_t rows, std::size_t cols) {
    if (!(lo < hi)) {
        throw UsageError("uniform bounds must satisfy lo < hi, got [" +
                         std::to_string(lo) + ", " + std::to_string(hi) + ")");
    }
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) {
        m.data()[i] = lo + (hi - lo) * rng.next_double();
    }
    return m;
}

} // namespace pnn
