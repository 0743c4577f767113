#include "graphclt/matrix.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace graphclt {

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
    }
}

}  // namespace

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix& Matrix::operator+=(const Matrix& other) {
    check_same_shape(*this, other, "Matrix::operator+=");
    for (size_t i = 0; i < a_.size(); ++i) a_[i] += other.a_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    check_same_shape(*this, other, "Matrix::operator-=");
    for (size_t i = 0; i < a_.size(); ++i) a_[i] -= other.a_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& x : a_) x *= s;
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
    Matrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

Vec matvec(const Matrix& a, const Vec& x) {
    if (a.cols() != static_cast<int>(x.size())) throw std::invalid_argument("matvec: dimension mismatch");
    Vec y(a.rows(), 0.0);
    for (int i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

Matrix outer(const Vec& u, const Vec& v) {
    Matrix m(static_cast<int>(u.size()), static_cast<int>(v.size()));
    for (size_t i = 0; i < u.size(); ++i)
        for (size_t j = 0; j < v.size(); ++j) m(static_cast<int>(i), static_cast<int>(j)) = u[i] * v[j];
    return m;
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double x : a.data()) m = std::max(m, std::fabs(x));
    return m;
}

double max_abs(const Vec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
    return m;
}

double max_abs_diff(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("max_abs_diff: size mismatch");
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

double norm_inf(const Matrix& a) {
    double m = 0.0;
    for (int i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < a.cols(); ++j) s += std::fabs(a(i, j));
        m = std::max(m, s);
    }
    return m;
}

bool all_finite(const Matrix& a) {
    for (double x : a.data())
        if (!std::isfinite(x)) return false;
    return true;
}

bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

Matrix symmetrize(const Matrix& a) {
    Matrix s(a.rows(), a.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
    return s;
}

Matrix mat_inverse(const Matrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("mat_inverse: matrix not square");
    const int n = m.rows();
    Matrix a = m;
    Matrix inv = Matrix::identity(n);
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(a(r, col)) > std::fabs(a(pivot, col))) pivot = r;
        if (std::fabs(a(pivot, col)) < 1e-14) {
            throw std::runtime_error("mat_inverse: singular matrix (pivot " +
                                     std::to_string(a(pivot, col)) + " below 1e-14)");
        }
        if (pivot != col) {
            for (int j = 0; j < n; ++j) {
                std::swap(a(pivot, j), a(col, j));
                std::swap(inv(pivot, j), inv(col, j));
            }
        }
        const double d = a(col, col);
        for (int j = 0; j < n; ++j) {
            a(col, j) /= d;
            inv(col, j) /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a(r, col);
            if (f == 0.0) continue;
            for (int j = 0; j < n; ++j) {
                a(r, j) -= f * a(col, j);
                inv(r, j) -= f * inv(col, j);
            }
        }
    }
    return inv;
}

double condition_inf(const Matrix& m, const Matrix& inv) {
    return norm_inf(m) * norm_inf(inv);
}

Matrix mat_exp(const Matrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("mat_exp: matrix not square");
    if (!all_finite(m)) throw std::invalid_argument("mat_exp: non-finite entries");
    const int n = m.rows();
    int squarings = 0;
    double norm = norm_inf(m);
    while (norm > 0.5) {
        norm *= 0.5;
        ++squarings;
    }
    Matrix x = m * std::ldexp(1.0, -squarings);
    Matrix result = Matrix::identity(n);
    Matrix term = Matrix::identity(n);
    for (int k = 1; k <= 40; ++k) {
        term = term * x;
        term *= 1.0 / k;
        result += term;
        if (max_abs(term) < 1e-18 * std::max(1.0, max_abs(result))) break;
    }
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

Matrix cholesky(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("cholesky: matrix not square");
    const int n = a.rows();
    Matrix l(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0) throw std::runtime_error("cholesky: matrix not positive definite");
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

double min_eigenvalue_sym(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("min_eigenvalue_sym: matrix not square");
    const int n = a.rows();
    if (n == 0) return 0.0;
    Matrix b = symmetrize(a);
    // Cyclic Jacobi; plenty for n <= 32.
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += b(p, q) * b(p, q);
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::fabs(b(p, q)) < 1e-300) continue;
                const double theta = (b(q, q) - b(p, p)) / (2.0 * b(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double bkp = b(k, p), bkq = b(k, q);
                    b(k, p) = c * bkp - s * bkq;
                    b(k, q) = s * bkp + c * bkq;
                }
                for (int k = 0; k < n; ++k) {
                    const double bpk = b(p, k), bqk = b(q, k);
                    b(p, k) = c * bpk - s * bqk;
                    b(q, k) = s * bpk + c * bqk;
                }
            }
        }
    }
    double mn = b(0, 0);
    for (int i = 1; i < n; ++i) mn = std::min(mn, b(i, i));
    return mn;
}

std::string to_string(const Matrix& a) {
    std::string out;
    char buf[64];
    for (int i = 0; i < a.rows(); ++i) {
        out += "[";
        for (int j = 0; j < a.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.6g", a(i, j));
            out += buf;
            if (j + 1 < a.cols()) out += ", ";
        }
        out += "]\n";
    }
    return out;
}

}  // namespace graphclt
