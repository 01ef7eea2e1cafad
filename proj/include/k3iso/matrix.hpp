#pragma once

#include "k3iso/common.hpp"

#include <algorithm>
#include <cassert>
#include <initializer_list>
#include <ostream>
#include <span>
#include <vector>

namespace k3iso {

// Dense row-major matrix over an exact ring (Int or Rat).
template <class T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {}
    Matrix(std::initializer_list<std::initializer_list<T>> init)
    {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_) throw std::invalid_argument("ragged matrix literal");
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static Matrix identity(std::size_t n)
    {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
        return m;
    }

    static Matrix diagonal(std::span<const T> d)
    {
        Matrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    // Columns of the result are the given vectors.
    static Matrix from_columns(std::span<const std::vector<T>> cols, std::size_t rows)
    {
        Matrix m(rows, cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (cols[j].size() != rows) throw std::invalid_argument("column length mismatch");
            for (std::size_t i = 0; i < rows; ++i) m(i, j) = cols[j][i];
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::vector<T> column(std::size_t j) const
    {
        std::vector<T> c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

    std::vector<T> row(std::size_t i) const
    {
        return std::vector<T>(data_.begin() + i * cols_, data_.begin() + (i + 1) * cols_);
    }

    std::vector<std::vector<T>> columns() const
    {
        std::vector<std::vector<T>> out;
        out.reserve(cols_);
        for (std::size_t j = 0; j < cols_; ++j) out.push_back(column(j));
        return out;
    }

    void set_column(std::size_t j, std::span<const T> c)
    {
        assert(c.size() == rows_);
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = c[i];
    }

    Matrix transpose() const
    {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    // Columns [first, first + count).
    Matrix column_block(std::size_t first, std::size_t count) const
    {
        Matrix m(rows_, count);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < count; ++j) m(i, j) = (*this)(i, first + j);
        return m;
    }

    Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const
    {
        Matrix m(nr, nc);
        for (std::size_t i = 0; i < nr; ++i)
            for (std::size_t j = 0; j < nc; ++j) m(i, j) = (*this)(r0 + i, c0 + j);
        return m;
    }

    void swap_rows(std::size_t a, std::size_t b)
    {
        if (a == b) return;
        for (std::size_t j = 0; j < cols_; ++j) std::swap((*this)(a, j), (*this)(b, j));
    }

    void swap_cols(std::size_t a, std::size_t b)
    {
        if (a == b) return;
        for (std::size_t i = 0; i < rows_; ++i) std::swap((*this)(i, a), (*this)(i, b));
    }

    // row[dst] += k * row[src]
    void add_row(std::size_t dst, std::size_t src, const T& k)
    {
        if (k == 0) return;
        for (std::size_t j = 0; j < cols_; ++j) (*this)(dst, j) += k * (*this)(src, j);
    }

    // col[dst] += k * col[src]
    void add_col(std::size_t dst, std::size_t src, const T& k)
    {
        if (k == 0) return;
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, dst) += k * (*this)(i, src);
    }

    void negate_row(std::size_t i)
    {
        for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) = -(*this)(i, j);
    }

    void negate_col(std::size_t j)
    {
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = -(*this)(i, j);
    }

    bool is_zero() const
    {
        return std::all_of(data_.begin(), data_.end(), [](const T& x) { return x == 0; });
    }

    const std::vector<T>& data() const { return data_; }

    friend bool operator==(const Matrix& a, const Matrix& b)
    {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

    friend Matrix operator*(const Matrix& a, const Matrix& b)
    {
        if (a.cols_ != b.rows_) throw std::invalid_argument("matrix product: shape mismatch");
        Matrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const T& aik = a(i, k);
                if (aik == 0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) {
                    const T& bkj = b(k, j);
                    if (bkj != 0) c(i, j) += aik * bkj;
                }
            }
        return c;
    }

    friend std::vector<T> operator*(const Matrix& a, std::span<const T> x)
    {
        if (a.cols_ != x.size()) throw std::invalid_argument("matrix-vector product: shape mismatch");
        std::vector<T> y(a.rows_, T(0));
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k)
                if (a(i, k) != 0 && x[k] != 0) y[i] += a(i, k) * x[k];
        return y;
    }

    friend std::vector<T> operator*(const Matrix& a, const std::vector<T>& x)
    {
        return a * std::span<const T>(x);
    }

    friend Matrix operator+(Matrix a, const Matrix& b)
    {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw std::invalid_argument("matrix sum: shape mismatch");
        for (std::size_t k = 0; k < a.data_.size(); ++k) a.data_[k] += b.data_[k];
        return a;
    }

    friend Matrix operator-(Matrix a, const Matrix& b)
    {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw std::invalid_argument("matrix difference: shape mismatch");
        for (std::size_t k = 0; k < a.data_.size(); ++k) a.data_[k] -= b.data_[k];
        return a;
    }

    friend Matrix operator-(Matrix a)
    {
        for (auto& x : a.data_) x = -x;
        return a;
    }

    friend Matrix operator*(const T& k, Matrix a)
    {
        for (auto& x : a.data_) x *= k;
        return a;
    }

    friend std::ostream& operator<<(std::ostream& os, const Matrix& m)
    {
        os << '[';
        for (std::size_t i = 0; i < m.rows_; ++i) {
            os << (i ? ", [" : "[");
            for (std::size_t j = 0; j < m.cols_; ++j) os << (j ? ", " : "") << m(i, j);
            os << ']';
        }
        return os << ']';
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using IntMatrix = Matrix<Int>;
using RatMatrix = Matrix<Rat>;

inline RatMatrix to_rational(const IntMatrix& a)
{
    RatMatrix r(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = a(i, j);
    return r;
}

inline RatVector to_rational(std::span<const Int> v) { return RatVector(v.begin(), v.end()); }

inline bool is_integral(const RatMatrix& a)
{
    return std::all_of(a.data().begin(), a.data().end(), [](const Rat& x) { return x.get_den() == 1; });
}

inline bool is_integral(std::span<const Rat> v)
{
    return std::all_of(v.begin(), v.end(), [](const Rat& x) { return x.get_den() == 1; });
}

// Throws if some entry is not an integer.
inline IntMatrix to_integer(const RatMatrix& a)
{
    IntMatrix r(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (a(i, j).get_den() != 1) throw math_error("matrix entry is not integral: " + a(i, j).get_str());
            r(i, j) = a(i, j).get_num();
        }
    return r;
}

inline IntVector to_integer(std::span<const Rat> v)
{
    IntVector r;
    r.reserve(v.size());
    for (const Rat& x : v) {
        if (x.get_den() != 1) throw math_error("vector entry is not integral: " + x.get_str());
        r.push_back(x.get_num());
    }
    return r;
}

template <class T>
std::vector<T> operator+(std::vector<T> a, const std::vector<T>& b)
{
    assert(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

template <class T>
std::vector<T> operator-(std::vector<T> a, const std::vector<T>& b)
{
    assert(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}

template <class T>
std::vector<T> operator-(std::vector<T> a)
{
    for (auto& x : a) x = -x;
    return a;
}

template <class T>
std::vector<T> operator*(const T& k, std::vector<T> a)
{
    for (auto& x : a) x *= k;
    return a;
}

template <class T>
bool is_zero(std::span<const T> v)
{
    return std::all_of(v.begin(), v.end(), [](const T& x) { return x == 0; });
}

template <class T>
bool is_zero(const std::vector<T>& v)
{
    return is_zero(std::span<const T>(v));
}

template <class T>
std::vector<T> unit_vector(std::size_t n, std::size_t i)
{
    std::vector<T> v(n, T(0));
    v[i] = 1;
    return v;
}

// x^T A y
template <class T>
T bilinear(const Matrix<T>& a, std::span<const T> x, std::span<const T> y)
{
    T s = 0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        if (x[i] == 0) continue;
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (a(i, j) != 0 && y[j] != 0) s += x[i] * a(i, j) * y[j];
    }
    return s;
}

// Content (gcd of entries), always >= 0.
inline Int content(std::span<const Int> v)
{
    Int g = 0;
    for (const Int& x : v) g = gcd(g, x);
    return g;
}

// Scale a rational vector to the primitive integral vector on the same ray.
inline IntVector primitive_multiple(std::span<const Rat> v)
{
    Int den = 1;
    for (const Rat& x : v) den = lcm(den, x.get_den());
    IntVector w;
    w.reserve(v.size());
    for (const Rat& x : v) w.push_back(x.get_num() * (den / x.get_den()));
    const Int g = content(w);
    if (g == 0) throw math_error("zero vector has no primitive multiple");
    for (Int& x : w) x /= g;
    return w;
}

}  // namespace k3iso
