// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mars/rational.hpp"

#include <cstddef>
#include <vector>

namespace mars::linalg {

// Dense rational vector.
struct RatVector {
    std::vector<Rational> e;

    RatVector() = default;
    explicit RatVector(std::size_t dim) : e(dim) {}
    explicit RatVector(std::vector<Rational> entries) : e(std::move(entries)) {}

    std::size_t dim() const { return e.size(); }
    Rational& operator[](std::size_t i) { return e[i]; }
    const Rational& operator[](std::size_t i) const { return e[i]; }

    bool is_zero() const;
    bool is_integral() const;
    std::vector<Int> to_int() const; // requires is_integral()

    friend bool operator==(const RatVector&, const RatVector&) = default;
    friend bool operator<(const RatVector& a, const RatVector& b) {
        if (a.e.size() != b.e.size())
            return a.e.size() < b.e.size();
        for (std::size_t i = 0; i < a.e.size(); ++i)
            if (a.e[i] != b.e[i])
                return a.e[i] < b.e[i];
        return false;
    }
};

RatVector operator+(const RatVector& a, const RatVector& b);
RatVector operator-(const RatVector& a, const RatVector& b);
RatVector operator*(const Rational& c, const RatVector& v);
Rational dot(const RatVector& a, const RatVector& b);

RatVector from_ints(const std::vector<Int>& v);

// Dense row-major rational matrix.
struct RatMatrix {
    RatMatrix() = default;
    RatMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols) {}

    static RatMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    Rational& at(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
    const Rational& at(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }

    RatVector apply(const RatVector& x) const; // A x
    RatMatrix transposed() const;
    bool is_identity() const;

    friend bool operator==(const RatMatrix&, const RatMatrix&) = default;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Rational> a_;
};

// Basis of a linear subspace of Q^ambient_dim. Vectors are linearly
// independent; an empty vector list is the zero subspace.
struct SubspaceBasis {
    std::size_t ambient_dim = 0;
    std::vector<RatVector> vectors;

    std::size_t dim() const { return vectors.size(); }
};

// Exact rank by fraction-free (Bareiss) elimination on the
// denominator-cleared matrix.
std::size_t rank(const RatMatrix& A);

// Basis of {x : Ax = 0}. Vectors are primitive integer-scaled and
// deterministic (free-column order of the reduced row echelon form).
SubspaceBasis kernel_basis(const RatMatrix& A);

// Orthogonal complement of span(K) inside Q^ambient: the canonical
// supplementary making projections and W(t'-t) unique.
SubspaceBasis supplementary_basis(const SubspaceBasis& K);

// Orthogonal projection of v onto span(S), via the exact Gram solve.
RatVector project_onto(const SubspaceBasis& S, const RatVector& v);

// Solve A x = b for square nonsingular A; throws Error when singular.
RatVector solve(const RatMatrix& A, const RatVector& b);

// True when span(A) = span(B) (same ambient dim, equal span).
bool same_span(const SubspaceBasis& A, const SubspaceBasis& B);

} // namespace mars::linalg
