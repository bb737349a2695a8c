// SPDX-License-Identifier: Apache-2.0

#include "mars/linalg.hpp"

#include "mars/errors.hpp"

namespace mars::linalg {

bool RatVector::is_zero() const {
    for (const auto& x : e)
        if (x != 0)
            return false;
    return true;
}

bool RatVector::is_integral() const {
    for (const auto& x : e)
        if (denominator(x) != 1)
            return false;
    return true;
}

std::vector<Int> RatVector::to_int() const {
    std::vector<Int> out;
    out.reserve(e.size());
    for (const auto& x : e) {
        if (denominator(x) != 1)
            throw Error("RatVector::to_int: entry " + mars::to_string(x) + " is not integral");
        out.push_back(numerator(x));
    }
    return out;
}

RatVector operator+(const RatVector& a, const RatVector& b) {
    RatVector r(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i)
        r[i] = a[i] + b[i];
    return r;
}

RatVector operator-(const RatVector& a, const RatVector& b) {
    RatVector r(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i)
        r[i] = a[i] - b[i];
    return r;
}

RatVector operator*(const Rational& c, const RatVector& v) {
    RatVector r(v.dim());
    for (std::size_t i = 0; i < v.dim(); ++i)
        r[i] = c * v[i];
    return r;
}

Rational dot(const RatVector& a, const RatVector& b) {
    Rational s = 0;
    for (std::size_t i = 0; i < a.dim(); ++i)
        s += a[i] * b[i];
    return s;
}

RatVector from_ints(const std::vector<Int>& v) {
    RatVector r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        r[i] = Rational(v[i]);
    return r;
}

RatMatrix RatMatrix::identity(std::size_t n) {
    RatMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        m.at(i, i) = 1;
    return m;
}

RatVector RatMatrix::apply(const RatVector& x) const {
    if (x.dim() != cols_)
        throw Error("RatMatrix::apply: dimension mismatch");
    RatVector y(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        Rational s = 0;
        for (std::size_t c = 0; c < cols_; ++c)
            s += at(r, c) * x[c];
        y[r] = s;
    }
    return y;
}

RatMatrix RatMatrix::transposed() const {
    RatMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c)
            t.at(c, r) = at(r, c);
    return t;
}

bool RatMatrix::is_identity() const {
    if (rows_ != cols_)
        return false;
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c)
            if (at(r, c) != (r == c ? 1 : 0))
                return false;
    return true;
}

namespace {

// Reduced row echelon form in place. Returns the pivot column of each
// pivot row.
std::vector<std::size_t> rref(RatMatrix& M) {
    std::vector<std::size_t> pivots;
    std::size_t row = 0;
    for (std::size_t col = 0; col < M.cols() && row < M.rows(); ++col) {
        std::size_t p = row;
        while (p < M.rows() && M.at(p, col) == 0)
            ++p;
        if (p == M.rows())
            continue;
        if (p != row)
            for (std::size_t c = 0; c < M.cols(); ++c)
                std::swap(M.at(p, c), M.at(row, c));
        Rational inv = Rational(1) / M.at(row, col);
        for (std::size_t c = col; c < M.cols(); ++c)
            M.at(row, c) *= inv;
        for (std::size_t r = 0; r < M.rows(); ++r) {
            if (r == row || M.at(r, col) == 0)
                continue;
            Rational f = M.at(r, col);
            for (std::size_t c = col; c < M.cols(); ++c)
                M.at(r, c) -= f * M.at(row, c);
        }
        pivots.push_back(col);
        ++row;
    }
    return pivots;
}

// Scale to a primitive integer vector with positive leading entry.
RatVector primitive(const RatVector& v) {
    Int den = 1;
    for (const auto& x : v.e)
        den = lcm(den, denominator(x));
    Int g = 0;
    std::vector<Int> num(v.dim());
    for (std::size_t i = 0; i < v.dim(); ++i) {
        num[i] = numerator(Rational(v[i] * den));
        g = gcd(g, num[i]);
    }
    if (g == 0)
        return v;
    Int sign = 1;
    for (const auto& n : num) {
        if (n != 0) {
            if (n < 0)
                sign = -1;
            break;
        }
    }
    RatVector out(v.dim());
    for (std::size_t i = 0; i < v.dim(); ++i)
        out[i] = Rational(sign * num[i] / g);
    return out;
}

} // namespace

std::size_t rank(const RatMatrix& A) {
    const std::size_t m = A.rows(), n = A.cols();
    if (m == 0 || n == 0)
        return 0;
    // Clear denominators row-wise; row scaling leaves the rank unchanged.
    std::vector<std::vector<Int>> M(m, std::vector<Int>(n));
    for (std::size_t r = 0; r < m; ++r) {
        Int den = 1;
        for (std::size_t c = 0; c < n; ++c)
            den = lcm(den, denominator(A.at(r, c)));
        for (std::size_t c = 0; c < n; ++c)
            M[r][c] = numerator(Rational(A.at(r, c) * den));
    }
    Int prev = 1;
    std::size_t rk = 0;
    for (std::size_t col = 0; col < n && rk < m; ++col) {
        std::size_t p = rk;
        while (p < m && M[p][col] == 0)
            ++p;
        if (p == m)
            continue;
        if (p != rk)
            std::swap(M[p], M[rk]);
        for (std::size_t i = rk + 1; i < m; ++i) {
            for (std::size_t j = col + 1; j < n; ++j)
                M[i][j] = (M[i][j] * M[rk][col] - M[i][col] * M[rk][j]) / prev;
            M[i][col] = 0;
        }
        prev = M[rk][col];
        ++rk;
    }
    return rk;
}

SubspaceBasis kernel_basis(const RatMatrix& A) {
    const std::size_t n = A.cols();
    SubspaceBasis basis;
    basis.ambient_dim = n;
    RatMatrix M = A;
    std::vector<std::size_t> pivots = M.rows() ? rref(M) : std::vector<std::size_t>{};
    std::vector<bool> is_pivot(n, false);
    for (std::size_t p : pivots)
        is_pivot[p] = true;
    for (std::size_t f = 0; f < n; ++f) {
        if (is_pivot[f])
            continue;
        RatVector v(n);
        v[f] = 1;
        for (std::size_t r = 0; r < pivots.size(); ++r)
            v[pivots[r]] = -M.at(r, f);
        basis.vectors.push_back(primitive(v));
    }
    return basis;
}

SubspaceBasis supplementary_basis(const SubspaceBasis& K) {
    if (K.vectors.empty()) {
        SubspaceBasis full;
        full.ambient_dim = K.ambient_dim;
        for (std::size_t i = 0; i < K.ambient_dim; ++i) {
            RatVector e(K.ambient_dim);
            e[i] = 1;
            full.vectors.push_back(e);
        }
        return full;
    }
    RatMatrix M(K.vectors.size(), K.ambient_dim);
    for (std::size_t r = 0; r < K.vectors.size(); ++r)
        for (std::size_t c = 0; c < K.ambient_dim; ++c)
            M.at(r, c) = K.vectors[r][c];
    return kernel_basis(M);
}

RatVector project_onto(const SubspaceBasis& S, const RatVector& v) {
    if (v.dim() != S.ambient_dim)
        throw Error("project_onto: dimension mismatch");
    if (S.vectors.empty())
        return RatVector(v.dim());
    const std::size_t k = S.vectors.size();
    RatMatrix G(k, k);
    RatVector rhs(k);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j)
            G.at(i, j) = dot(S.vectors[i], S.vectors[j]);
        rhs[i] = dot(S.vectors[i], v);
    }
    RatVector c = solve(G, rhs);
    RatVector p(v.dim());
    for (std::size_t i = 0; i < k; ++i)
        p = p + c[i] * S.vectors[i];
    return p;
}

RatVector solve(const RatMatrix& A, const RatVector& b) {
    const std::size_t n = A.rows();
    if (A.cols() != n || b.dim() != n)
        throw Error("solve: matrix must be square and match the rhs");
    RatMatrix M(n, n + 1);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c)
            M.at(r, c) = A.at(r, c);
        M.at(r, n) = b[r];
    }
    std::vector<std::size_t> pivots = rref(M);
    if (pivots.size() != n || pivots.back() == n)
        throw Error("solve: singular system");
    RatVector x(n);
    for (std::size_t r = 0; r < n; ++r)
        x[pivots[r]] = M.at(r, n);
    return x;
}

bool same_span(const SubspaceBasis& A, const SubspaceBasis& B) {
    if (A.ambient_dim != B.ambient_dim || A.dim() != B.dim())
        return false;
    if (A.dim() == 0)
        return true;
    RatMatrix stacked(A.dim() + B.dim(), A.ambient_dim);
    for (std::size_t r = 0; r < A.dim(); ++r)
        for (std::size_t c = 0; c < A.ambient_dim; ++c)
            stacked.at(r, c) = A.vectors[r][c];
    for (std::size_t r = 0; r < B.dim(); ++r)
        for (std::size_t c = 0; c < A.ambient_dim; ++c)
            stacked.at(A.dim() + r, c) = B.vectors[r][c];
    return rank(stacked) == A.dim();
}

} // namespace mars::linalg
