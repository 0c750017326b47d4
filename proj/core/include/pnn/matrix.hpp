#ifndef PNN_MATRIX_HPP
#define PNN_MATRIX_HPP

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <vector>

#include "pnn/rng.hpp"

namespace pnn {

/// Dense row-major matrix of doubles. Always non-empty (rows, cols >= 1).
///
/// Values are immutable in normal use; the optimizer mutates through the
/// explicit *_in_place functions. All products accumulate over the
/// contracted index in ascending order with a fixed block size, so results
/// are deterministic for a given build.
class Matrix {
public:
    Matrix(std::size_t rows, std::size_t cols);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
    const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

// Products. transpose_a computes aT*b without materializing the transpose.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_transpose_a(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);
Matrix elementwise(const Matrix& a, const std::function<double(double)>& f);

/// Rows [begin, begin+count) as a new matrix.
Matrix row_slice(const Matrix& a, std::size_t begin, std::size_t count);

/// New matrix whose row i is a's row indices[i].
Matrix gather_rows(const Matrix& a, const std::vector<std::size_t>& indices);

/// Per-row index of the maximum; ties break toward the lowest index.
std::vector<std::size_t> argmax_rows(const Matrix& a);

/// Column sums as a cols x 1 matrix, summed in ascending row order.
Matrix col_sums_to_column(const Matrix& a);

/// Adds bias (cols x 1) to every row of a.
Matrix add_row_broadcast(const Matrix& a, const Matrix& bias);

// In-place updates used by the optimizer.
void scale_in_place(Matrix& a, double c);
void axpy_in_place(Matrix& y, double alpha, const Matrix& x); // y += alpha*x

bool bit_equal(const Matrix& a, const Matrix& b);
double max_abs_diff(const Matrix& a, const Matrix& b);

/// i.i.d. draws in [lo, hi), filled row-major; advances rng deterministically.
Matrix uniform(Rng& rng, double lo, double hi, std::size_t rows, std::size_t cols);

} // namespace pnn

#endif
