#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace graphclt {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles. Sized for the small systems this
/// library works with (q <= 32); no attempt at cache blocking or SIMD.
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, 0.0) {}

    static Matrix identity(int n);
    static Matrix zero(int n) { return Matrix(n, n); }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

    const std::vector<double>& data() const { return a_; }
    std::vector<double>& data() { return a_; }

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s);

private:
    int rows_, cols_;
    std::vector<double> a_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);

Vec matvec(const Matrix& a, const Vec& x);
Matrix transpose(const Matrix& a);
Matrix outer(const Vec& u, const Vec& v);

/// max_ij |a_ij|
double max_abs(const Matrix& a);
double max_abs(const Vec& v);
/// max_ij |a_ij - b_ij|
double max_abs_diff(const Matrix& a, const Matrix& b);
double max_abs_diff(const Vec& a, const Vec& b);
/// Induced infinity norm (max absolute row sum).
double norm_inf(const Matrix& a);

bool all_finite(const Matrix& a);
bool all_finite(const Vec& v);

/// Averages a with its transpose; use when the result is symmetric by
/// construction and only round-off breaks it.
Matrix symmetrize(const Matrix& a);

/// Gauss-Jordan elimination with partial pivoting. Throws
/// std::runtime_error if a pivot falls below 1e-14 in magnitude.
Matrix mat_inverse(const Matrix& m);

/// norm_inf(m) * norm_inf(inv); cheap conditioning estimate.
double condition_inf(const Matrix& m, const Matrix& inv);

/// Matrix exponential by scaling-and-squaring with a truncated Taylor
/// series. Relative accuracy around 1e-13 for norm_inf(m) <= 10.
Matrix mat_exp(const Matrix& m);

/// Lower-triangular Cholesky factor of a symmetric positive definite
/// matrix. Throws std::runtime_error if a diagonal pivot is <= 0.
Matrix cholesky(const Matrix& a);

/// Smallest eigenvalue of a symmetric matrix (Jacobi rotations).
double min_eigenvalue_sym(const Matrix& a);

std::string to_string(const Matrix& a);

}  // namespace graphclt
