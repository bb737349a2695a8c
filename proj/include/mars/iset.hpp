// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mars/rational.hpp"

#include <nlohmann/json_fwd.hpp>

#include <compare>
#include <optional>
#include <vector>

namespace mars::iset {

// coeffs.x + constant >= 0 (GE) or == 0 (EQ), over integer points x.
enum class Kind { GE, EQ };

struct AffineConstraint {
    std::vector<Int> coeffs;
    Int constant = 0;
    Kind kind = Kind::GE;

    Int eval(const std::vector<Int>& x) const;

    friend bool operator==(const AffineConstraint& a, const AffineConstraint& b) {
        return a.kind == b.kind && a.constant == b.constant && a.coeffs == b.coeffs;
    }
    friend bool operator<(const AffineConstraint& a, const AffineConstraint& b) {
        if (a.kind != b.kind)
            return a.kind < b.kind;
        if (a.coeffs != b.coeffs)
            return a.coeffs < b.coeffs;
        return a.constant < b.constant;
    }
};

// modulus | (coeffs.x + constant), modulus > 1 after normalization.
struct DivConstraint {
    std::vector<Int> coeffs;
    Int constant = 0;
    Int modulus = 2;

    Int eval(const std::vector<Int>& x) const;

    friend bool operator==(const DivConstraint& a, const DivConstraint& b) {
        return a.modulus == b.modulus && a.constant == b.constant && a.coeffs == b.coeffs;
    }
    friend bool operator<(const DivConstraint& a, const DivConstraint& b) {
        if (a.modulus != b.modulus)
            return a.modulus < b.modulus;
        if (a.coeffs != b.coeffs)
            return a.coeffs < b.coeffs;
        return a.constant < b.constant;
    }
};

// Conjunction of affine and divisibility constraints over Z^dim.
struct Cell {
    std::size_t dim = 0;
    std::vector<AffineConstraint> ineqs; // includes equalities
    std::vector<DivConstraint> divs;

    friend bool operator==(const Cell& a, const Cell& b) {
        return a.dim == b.dim && a.ineqs == b.ineqs && a.divs == b.divs;
    }
    friend bool operator<(const Cell& a, const Cell& b) {
        if (a.dim != b.dim)
            return a.dim < b.dim;
        if (a.ineqs != b.ineqs)
            return a.ineqs < b.ineqs;
        return a.divs < b.divs;
    }
};

using Point = std::vector<Int>;

struct Box {
    std::vector<Int> lo, hi; // inclusive bounds per dimension

    bool contains(const Point& p) const;
};

// Finite union of cells; the universal set representation of the
// analysis. An empty cell list is the empty set. Cells may overlap.
struct ISet {
    std::size_t dim = 0;
    std::vector<Cell> cells;

    static ISet empty_set(std::size_t dim) { return ISet{dim, {}}; }
    static ISet universe(std::size_t dim) { return ISet{dim, {Cell{dim, {}, {}}}}; }

    friend bool operator==(const ISet&, const ISet&) = default; // structural, not semantic
};

// Integer affine map x -> Ax + b.
struct AffineMap {
    std::vector<std::vector<Int>> A; // out_dim rows of in_dim coefficients
    std::vector<Int> b;

    std::size_t in_dim() const { return A.empty() ? 0 : A[0].size(); }
    std::size_t out_dim() const { return A.size(); }
    Point apply(const Point& x) const;
};

// Constructors.
AffineConstraint ge(std::vector<Int> coeffs, Int constant);
AffineConstraint eq(std::vector<Int> coeffs, Int constant);
DivConstraint divides(Int modulus, std::vector<Int> coeffs, Int constant);
ISet make_set(std::size_t dim, std::vector<AffineConstraint> ineqs, std::vector<DivConstraint> divs = {});

// Set algebra. All operations are exact over integer points.
ISet intersect(const ISet& a, const ISet& b);
ISet unite(const ISet& a, const ISet& b);
ISet subtract(const ISet& a, const ISet& b);
ISet translate(const ISet& s, const std::vector<Int>& v);

// Exact integer image {Ax + b : x in s}. Equality pivots eliminate what
// they can (adding divisibility witnesses for non-unit pivots); leftover
// variables are removed by exact Cooper elimination.
ISet image(const AffineMap& f, const ISet& s);

// Existentially quantify dimensions [first, first+count), exactly.
ISet project_out(const ISet& s, std::size_t first, std::size_t count);

// True iff s has no integer point. Rational feasibility first, then
// bounded enumeration, then full elimination; throws UndecidedError if
// the blow-up guards trip (never a wrong answer).
bool is_empty(const ISet& s);

bool equal(const ISet& a, const ISet& b);

bool contains(const ISet& s, const Point& p);

// All integer points of s within box, in lexicographic order.
std::vector<Point> enumerate(const ISet& s, const Box& box);

// Tight integer bounding box of the rational relaxation. nullopt when
// unbounded in some direction; a Box with lo > hi marks emptiness.
std::optional<Box> bounding_box(const ISet& s);

// Lexicographically smallest point; requires a bounded, non-empty set.
Point lexmin(const ISet& s);

// Sorted cells/constraints and normalized forms; byte-stable reports.
ISet canonicalized(ISet s);

nlohmann::ordered_json to_json(const ISet& s);
ISet iset_from_json(const nlohmann::json& j);

} // namespace mars::iset
