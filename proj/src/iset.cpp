// SPDX-License-Identifier: Apache-2.0

#include "mars/iset.hpp"

#include "mars/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <limits>
#include <map>

namespace mars::iset {

namespace {

// Blow-up guards. All sets in the MARS pipeline are desk scale; these
// trip only on adversarial inputs, raising UndecidedError instead of
// returning a wrong answer.
constexpr std::size_t kFmConstraintCap = 20000;
const Int kCooperModulusCap = 1000000;
constexpr std::size_t kCellCap = 100000;
const Int kEnumVolumeCap = 4000000;

Int dot_coeffs(const std::vector<Int>& c, const std::vector<Int>& x) {
    Int s = 0;
    for (std::size_t i = 0; i < c.size(); ++i)
        s += c[i] * x[i];
    return s;
}

Int gcd_coeffs(const std::vector<Int>& c) {
    Int g = 0;
    for (const auto& v : c)
        g = gcd(g, v);
    return g;
}

bool all_zero(const std::vector<Int>& c) {
    return std::all_of(c.begin(), c.end(), [](const Int& v) { return v == 0; });
}

// Normalize in place: gcd-tighten inequalities, canonicalize equalities
// and residues, drop trivial atoms, sort and dedupe. Returns false when
// the cell is syntactically infeasible.
bool normalize_cell(Cell& cell) {
    std::vector<AffineConstraint> ineqs;
    for (AffineConstraint c : cell.ineqs) {
        Int g = gcd_coeffs(c.coeffs);
        if (g == 0) {
            if (c.kind == Kind::GE ? c.constant < 0 : c.constant != 0)
                return false;
            continue;
        }
        if (c.kind == Kind::GE) {
            if (g > 1) {
                for (auto& v : c.coeffs)
                    v /= g;
                c.constant = floor_div(c.constant, g);
            }
        } else {
            if (c.constant % g != 0)
                return false;
            if (g > 1) {
                for (auto& v : c.coeffs)
                    v /= g;
                c.constant /= g;
            }
            // sign-canonical equalities: first nonzero coefficient positive
            for (const auto& v : c.coeffs) {
                if (v == 0)
                    continue;
                if (v < 0) {
                    for (auto& w : c.coeffs)
                        w = -w;
                    c.constant = -c.constant;
                }
                break;
            }
        }
        ineqs.push_back(std::move(c));
    }

    std::vector<DivConstraint> divs;
    for (DivConstraint d : cell.divs) {
        if (d.modulus <= 0)
            throw Error("divisibility modulus must be positive");
        Int g = gcd(gcd_coeffs(d.coeffs), d.modulus);
        if (g > 1) {
            if (d.constant % g != 0)
                return false;
            for (auto& v : d.coeffs)
                v /= g;
            d.constant /= g;
            d.modulus /= g;
        }
        if (d.modulus == 1)
            continue;
        for (auto& v : d.coeffs)
            v = mod_floor(v, d.modulus);
        d.constant = mod_floor(d.constant, d.modulus);
        if (all_zero(d.coeffs)) {
            if (d.constant != 0)
                return false;
            continue;
        }
        divs.push_back(std::move(d));
    }

    std::sort(ineqs.begin(), ineqs.end());
    ineqs.erase(std::unique(ineqs.begin(), ineqs.end()), ineqs.end());
    // among GE atoms sharing a coefficient vector, the smallest constant wins
    std::vector<AffineConstraint> pruned;
    for (auto& c : ineqs) {
        if (!pruned.empty() && pruned.back().kind == Kind::GE && c.kind == Kind::GE &&
            pruned.back().coeffs == c.coeffs) {
            // sorted ascending by constant; the first is the strongest
            continue;
        }
        pruned.push_back(std::move(c));
    }
    std::sort(divs.begin(), divs.end());
    divs.erase(std::unique(divs.begin(), divs.end()), divs.end());

    cell.ineqs = std::move(pruned);
    cell.divs = std::move(divs);
    return true;
}

// Inequality-only view for rational reasoning: equalities become pairs.
std::vector<AffineConstraint> ge_view(const Cell& cell) {
    std::vector<AffineConstraint> out;
    for (const auto& c : cell.ineqs) {
        if (c.kind == Kind::GE) {
            out.push_back(c);
        } else {
            out.push_back({c.coeffs, c.constant, Kind::GE});
            AffineConstraint neg{c.coeffs, c.constant, Kind::GE};
            for (auto& v : neg.coeffs)
                v = -v;
            neg.constant = -neg.constant;
            out.push_back(std::move(neg));
        }
    }
    return out;
}

// One Fourier-Motzkin step over the rationals (integer cross products).
// Returns false when a ground contradiction appears.
bool fm_eliminate(std::vector<AffineConstraint>& cs, std::size_t k) {
    std::vector<AffineConstraint> keep, lower, upper;
    for (auto& c : cs) {
        if (c.coeffs[k] == 0)
            keep.push_back(std::move(c));
        else if (c.coeffs[k] > 0)
            lower.push_back(std::move(c));
        else
            upper.push_back(std::move(c));
    }
    for (const auto& lo : lower) {
        for (const auto& up : upper) {
            AffineConstraint c;
            c.kind = Kind::GE;
            const Int a = lo.coeffs[k];
            const Int bpos = -up.coeffs[k];
            c.coeffs.resize(lo.coeffs.size());
            for (std::size_t i = 0; i < c.coeffs.size(); ++i)
                c.coeffs[i] = bpos * lo.coeffs[i] + a * up.coeffs[i];
            c.constant = bpos * lo.constant + a * up.constant;
            c.coeffs[k] = 0;
            Int g = gcd(gcd_coeffs(c.coeffs), c.constant < 0 ? -c.constant : c.constant);
            if (g > 1) {
                for (auto& v : c.coeffs)
                    v /= g;
                c.constant /= g;
            }
            if (all_zero(c.coeffs)) {
                if (c.constant < 0)
                    return false;
                continue;
            }
            keep.push_back(std::move(c));
        }
    }
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    if (keep.size() > kFmConstraintCap)
        throw UndecidedError("Fourier-Motzkin constraint blow-up");
    cs = std::move(keep);
    return true;
}

bool rationally_feasible(const Cell& cell) {
    std::vector<AffineConstraint> cs = ge_view(cell);
    for (std::size_t k = 0; k < cell.dim; ++k)
        if (!fm_eliminate(cs, k))
            return false;
    return true;
}

struct VarBounds {
    bool feasible = true;
    std::optional<Rational> lo, hi; // nullopt side = unbounded
};

// Rational bounds of one variable over the cell's relaxation.
VarBounds var_bounds(const Cell& cell, std::size_t k) {
    VarBounds out;
    std::vector<AffineConstraint> cs = ge_view(cell);
    for (std::size_t v = 0; v < cell.dim; ++v) {
        if (v == k)
            continue;
        if (!fm_eliminate(cs, v)) {
            out.feasible = false;
            return out;
        }
    }
    for (const auto& c : cs) {
        const Int& a = c.coeffs[k];
        if (a == 0) {
            if (c.constant < 0) {
                out.feasible = false;
                return out;
            }
            continue;
        }
        // a x + t >= 0  =>  x >= -t/a (a > 0) or x <= t/(-a) (a < 0)
        Rational bound = a > 0 ? Rational(-c.constant, a) : Rational(c.constant, -a);
        if (a > 0) {
            if (!out.lo || bound > *out.lo)
                out.lo = bound;
        } else {
            if (!out.hi || bound < *out.hi)
                out.hi = bound;
        }
    }
    if (out.lo && out.hi && *out.lo > *out.hi)
        out.feasible = false;
    return out;
}

void splice_index(std::vector<Int>& v, std::size_t k) { v.erase(v.begin() + k); }

Cell drop_dim(Cell cell, std::size_t k) {
    for (auto& c : cell.ineqs)
        splice_index(c.coeffs, k);
    for (auto& d : cell.divs)
        splice_index(d.coeffs, k);
    --cell.dim;
    return cell;
}

// Use the equality at eidx (nonzero coefficient on variable k) to
// substitute k out of every atom; exact over Z (a non-unit pivot adds
// the divisibility witness). Result has variable k removed.
Cell eliminate_with_equality(const Cell& cell, std::size_t k, std::size_t eidx) {
    const AffineConstraint& e = cell.ineqs[eidx];
    const Int c = e.coeffs[k];
    const Int cabs = c < 0 ? -c : c;
    const Int csign = c < 0 ? -1 : 1;
    std::vector<Int> rest = e.coeffs;
    rest[k] = 0;
    const Int rest_const = e.constant;

    Cell out;
    out.dim = cell.dim;
    for (std::size_t i = 0; i < cell.ineqs.size(); ++i) {
        if (i == eidx)
            continue;
        AffineConstraint a = cell.ineqs[i];
        const Int d = a.coeffs[k];
        if (d != 0) {
            for (std::size_t j = 0; j < a.coeffs.size(); ++j)
                a.coeffs[j] = cabs * a.coeffs[j] - csign * d * rest[j];
            a.constant = cabs * a.constant - csign * d * rest_const;
            a.coeffs[k] = 0;
        }
        out.ineqs.push_back(std::move(a));
    }
    for (DivConstraint d : cell.divs) {
        const Int dc = d.coeffs[k];
        if (dc != 0) {
            for (std::size_t j = 0; j < d.coeffs.size(); ++j)
                d.coeffs[j] = cabs * d.coeffs[j] - csign * dc * rest[j];
            d.constant = cabs * d.constant - csign * dc * rest_const;
            d.coeffs[k] = 0;
            d.modulus *= cabs;
        }
        out.divs.push_back(std::move(d));
    }
    if (cabs > 1) {
        DivConstraint w;
        w.coeffs = rest;
        w.constant = rest_const;
        w.modulus = cabs;
        out.divs.push_back(std::move(w));
    }
    return drop_dim(std::move(out), k);
}

struct LinExpr {
    std::vector<Int> coeffs;
    Int constant;
};

// Exact existential elimination of variable k (Cooper). The cell must
// not contain an equality with a nonzero coefficient on k.
std::vector<Cell> cooper_eliminate(const Cell& cell, std::size_t k) {
    Int L = 1;
    bool mentioned = false;
    for (const auto& c : cell.ineqs) {
        if (c.coeffs[k] != 0) {
            if (c.kind == Kind::EQ)
                throw Error("internal: equality reached Cooper elimination");
            L = lcm(L, c.coeffs[k] < 0 ? -c.coeffs[k] : c.coeffs[k]);
            mentioned = true;
        }
    }
    for (const auto& d : cell.divs) {
        if (d.coeffs[k] != 0) {
            L = lcm(L, d.coeffs[k] < 0 ? -d.coeffs[k] : d.coeffs[k]);
            mentioned = true;
        }
    }
    if (!mentioned)
        return {drop_dim(cell, k)};

    // Rescale every atom to coefficient +-L on k; u = L * x_k.
    std::vector<LinExpr> lowers;  // u + t >= 0
    std::vector<LinExpr> uppers;  // -u + s >= 0
    std::vector<AffineConstraint> free_ineqs;
    std::vector<std::pair<Int, LinExpr>> udivs; // m | (u + e)
    std::vector<DivConstraint> free_divs;

    for (const auto& c : cell.ineqs) {
        const Int a = c.coeffs[k];
        if (a == 0) {
            free_ineqs.push_back(c);
            continue;
        }
        const Int f = L / (a < 0 ? -a : a);
        LinExpr t;
        t.coeffs.resize(c.coeffs.size());
        for (std::size_t j = 0; j < c.coeffs.size(); ++j)
            t.coeffs[j] = f * c.coeffs[j];
        t.constant = f * c.constant;
        t.coeffs[k] = 0;
        if (a > 0)
            lowers.push_back(std::move(t));
        else
            uppers.push_back(std::move(t));
    }
    for (const auto& d : cell.divs) {
        const Int a = d.coeffs[k];
        if (a == 0) {
            free_divs.push_back(d);
            continue;
        }
        const Int f = L / (a < 0 ? -a : a);
        LinExpr e;
        e.coeffs.resize(d.coeffs.size());
        const Int s = a < 0 ? -1 : 1;
        for (std::size_t j = 0; j < d.coeffs.size(); ++j)
            e.coeffs[j] = s * f * d.coeffs[j];
        e.constant = s * f * d.constant;
        e.coeffs[k] = 0;
        udivs.emplace_back(f * d.modulus, std::move(e));
    }
    udivs.emplace_back(L, LinExpr{std::vector<Int>(cell.dim, 0), 0}); // L | u

    Int M = 1;
    for (const auto& [m, e] : udivs)
        M = lcm(M, m);
    if (M > kCooperModulusCap)
        throw UndecidedError("elimination residue modulus too large");

    std::vector<Cell> out;
    auto base_cell = [&]() {
        Cell b;
        b.dim = cell.dim;
        b.ineqs = free_ineqs;
        b.divs = free_divs;
        return b;
    };

    if (lowers.empty()) {
        // unbounded below: only the residue classes matter
        for (Int j = 0; j < M; ++j) {
            Cell cj = base_cell();
            for (const auto& [m, e] : udivs) {
                DivConstraint d;
                d.coeffs = e.coeffs;
                d.constant = e.constant + j;
                d.modulus = m;
                cj.divs.push_back(std::move(d));
            }
            cj = drop_dim(std::move(cj), k);
            if (normalize_cell(cj) && rationally_feasible(cj))
                out.push_back(std::move(cj));
        }
        return out;
    }

    if (Int(lowers.size()) * M > Int(kCellCap))
        throw UndecidedError("elimination disjunct blow-up");

    for (const auto& b : lowers) {
        for (Int j = 0; j < M; ++j) {
            // u = -t_b + j
            Cell cj = base_cell();
            for (const auto& t : lowers) {
                AffineConstraint c;
                c.kind = Kind::GE;
                c.coeffs.resize(cell.dim);
                for (std::size_t i = 0; i < cell.dim; ++i)
                    c.coeffs[i] = t.coeffs[i] - b.coeffs[i];
                c.constant = t.constant - b.constant + j;
                cj.ineqs.push_back(std::move(c));
            }
            for (const auto& s : uppers) {
                AffineConstraint c;
                c.kind = Kind::GE;
                c.coeffs.resize(cell.dim);
                for (std::size_t i = 0; i < cell.dim; ++i)
                    c.coeffs[i] = s.coeffs[i] + b.coeffs[i];
                c.constant = s.constant + b.constant - j;
                cj.ineqs.push_back(std::move(c));
            }
            for (const auto& [m, e] : udivs) {
                DivConstraint d;
                d.coeffs.resize(cell.dim);
                for (std::size_t i = 0; i < cell.dim; ++i)
                    d.coeffs[i] = e.coeffs[i] - b.coeffs[i];
                d.constant = e.constant - b.constant + j;
                d.modulus = m;
                cj.divs.push_back(std::move(d));
            }
            cj = drop_dim(std::move(cj), k);
            if (normalize_cell(cj) && rationally_feasible(cj))
                out.push_back(std::move(cj));
        }
    }
    return out;
}

// Substitute every value of a small bounded range for variable k; the
// exact fallback when residue elimination would blow up.
std::vector<Cell> eliminate_by_expansion(const Cell& cell, std::size_t k, const Int& lo, const Int& hi) {
    std::vector<Cell> out;
    for (Int v = lo; v <= hi; ++v) {
        Cell c = cell;
        for (auto& a : c.ineqs) {
            a.constant += a.coeffs[k] * v;
            a.coeffs[k] = 0;
        }
        for (auto& d : c.divs) {
            d.constant += d.coeffs[k] * v;
            d.coeffs[k] = 0;
        }
        c = drop_dim(std::move(c), k);
        if (normalize_cell(c) && rationally_feasible(c))
            out.push_back(std::move(c));
    }
    return out;
}

// Estimated disjunct count of a Cooper step on variable k.
Int cooper_cost(const Cell& cell, std::size_t k) {
    Int L = 1;
    std::size_t lowers = 0;
    for (const auto& c : cell.ineqs) {
        if (c.coeffs[k] == 0)
            continue;
        L = lcm(L, Int(abs(c.coeffs[k])));
        if (c.coeffs[k] > 0)
            ++lowers;
    }
    Int M = L;
    for (const auto& d : cell.divs)
        if (d.coeffs[k] != 0)
            M = lcm(M, d.modulus * (L / gcd(L, Int(abs(d.coeffs[k])))));
    return M * Int(std::max<std::size_t>(lowers, 1));
}

// Eliminate every variable whose current index is in `targets`
// (descending). Prefers equality pivots, then whichever of residue
// elimination or small-range expansion is cheaper.
void project_cell_rec(const Cell& in, std::vector<std::size_t> targets, std::vector<Cell>& out) {
    Cell cell = in;
    if (!normalize_cell(cell))
        return;
    if (targets.empty()) {
        out.push_back(std::move(cell));
        return;
    }

    // best equality pivot across all target variables
    std::optional<std::pair<std::size_t, std::size_t>> pivot; // (var, eq index)
    Int best = 0;
    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        const std::size_t k = targets[ti];
        for (std::size_t ei = 0; ei < cell.ineqs.size(); ++ei) {
            const auto& c = cell.ineqs[ei];
            if (c.kind != Kind::EQ || c.coeffs[k] == 0)
                continue;
            Int a = abs(c.coeffs[k]);
            if (!pivot || a < best) {
                pivot = {k, ei};
                best = a;
            }
        }
    }

    std::size_t k;
    std::vector<Cell> next;
    if (pivot) {
        k = pivot->first;
        next.push_back(eliminate_with_equality(cell, k, pivot->second));
    } else {
        k = targets[0];
        Int best_cost = -1;
        for (std::size_t t : targets) {
            Int cost = cooper_cost(cell, t);
            if (best_cost < 0 || cost < best_cost) {
                best_cost = cost;
                k = t;
            }
        }
        bool expanded = false;
        if (best_cost > 512) {
            // residues are getting expensive: a bounded variable with a
            // small range is cheaper to expand outright
            std::size_t best_var = 0;
            Int best_range = -1, best_lo = 0;
            for (std::size_t t : targets) {
                VarBounds b = var_bounds(cell, t);
                if (!b.feasible)
                    return;
                if (!b.lo || !b.hi)
                    continue;
                Int lo = rat_ceil(*b.lo), hi = rat_floor(*b.hi);
                if (lo > hi)
                    return;
                Int range = hi - lo + 1;
                if (best_range < 0 || range < best_range) {
                    best_range = range;
                    best_var = t;
                    best_lo = lo;
                }
            }
            if (best_range > 0 && best_range <= 64) {
                k = best_var;
                next = eliminate_by_expansion(cell, k, best_lo, best_lo + best_range - 1);
                expanded = true;
            }
        }
        if (!expanded)
            next = cooper_eliminate(cell, k);
    }

    std::vector<std::size_t> rest;
    for (std::size_t t : targets)
        if (t != k)
            rest.push_back(t > k ? t - 1 : t);

    for (const auto& c : next) {
        project_cell_rec(c, rest, out);
        if (out.size() > kCellCap)
            throw UndecidedError("projection cell blow-up");
    }
}

bool cell_contains(const Cell& cell, const Point& p) {
    for (const auto& c : cell.ineqs) {
        Int v = dot_coeffs(c.coeffs, p) + c.constant;
        if (c.kind == Kind::GE ? v < 0 : v != 0)
            return false;
    }
    for (const auto& d : cell.divs)
        if (mod_floor(dot_coeffs(d.coeffs, p) + d.constant, d.modulus) != 0)
            return false;
    return true;
}

// Integer bounding box of one cell's rational relaxation.
// Returns: feasible flag; box (when bounded); unbounded flag.
struct CellBox {
    bool feasible = true;
    bool bounded = true;
    Box box;
};

CellBox cell_box(const Cell& cell) {
    CellBox out;
    out.box.lo.resize(cell.dim);
    out.box.hi.resize(cell.dim);
    for (std::size_t k = 0; k < cell.dim; ++k) {
        VarBounds b = var_bounds(cell, k);
        if (!b.feasible) {
            out.feasible = false;
            return out;
        }
        if (!b.lo || !b.hi) {
            out.bounded = false;
            continue;
        }
        out.box.lo[k] = rat_ceil(*b.lo);
        out.box.hi[k] = rat_floor(*b.hi);
        if (out.box.lo[k] > out.box.hi[k]) {
            out.feasible = false; // no integer point in this direction
            return out;
        }
    }
    return out;
}

// Search the box for a point of the cell, lexicographic order.
std::optional<Point> find_point_in_box(const Cell& cell, const Box& box) {
    if (cell.dim == 0)
        return Point{};
    Point p = box.lo;
    while (true) {
        if (cell_contains(cell, p))
            return p;
        std::size_t k = cell.dim;
        while (k > 0) {
            --k;
            if (p[k] < box.hi[k]) {
                ++p[k];
                for (std::size_t j = k + 1; j < cell.dim; ++j)
                    p[j] = box.lo[j];
                break;
            }
            if (k == 0)
                return std::nullopt;
        }
    }
}

bool cell_is_empty(const Cell& in) {
    Cell cell = in;
    if (!normalize_cell(cell))
        return true;
    if (cell.dim == 0)
        return false; // normalized ground cell is satisfiable
    if (!rationally_feasible(cell))
        return true;
    CellBox cb = cell_box(cell);
    if (!cb.feasible)
        return true;
    if (cb.bounded) {
        Int volume = 1;
        for (std::size_t k = 0; k < cell.dim; ++k) {
            volume *= cb.box.hi[k] - cb.box.lo[k] + 1;
            if (volume > kEnumVolumeCap)
                break;
        }
        if (volume <= kEnumVolumeCap)
            return !find_point_in_box(cell, cb.box).has_value();
    }
    // unbounded (or huge) but rationally feasible: decide by full
    // elimination of every variable
    std::vector<std::size_t> targets(cell.dim);
    for (std::size_t i = 0; i < cell.dim; ++i)
        targets[i] = cell.dim - 1 - i;
    std::vector<Cell> ground;
    project_cell_rec(cell, targets, ground);
    return ground.empty();
}

void check_same_dim(const ISet& a, const ISet& b, const char* op) {
    if (a.dim != b.dim)
        throw Error(std::string(op) + ": dimension mismatch (" + std::to_string(a.dim) + " vs " +
                    std::to_string(b.dim) + ")");
}

Int checked_int(const nlohmann::json& j, const char* what) {
    if (!j.is_number_integer())
        throw ValidationError(std::string(what) + ": expected an integer");
    return Int(j.get<long long>());
}

long long to_ll(const Int& v, const char* what) {
    if (v > std::numeric_limits<long long>::max() || v < std::numeric_limits<long long>::min())
        throw Error(std::string(what) + ": value out of serializable range");
    return v.convert_to<long long>();
}

} // namespace

Int AffineConstraint::eval(const std::vector<Int>& x) const { return dot_coeffs(coeffs, x) + constant; }
Int DivConstraint::eval(const std::vector<Int>& x) const { return dot_coeffs(coeffs, x) + constant; }

bool Box::contains(const Point& p) const {
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (p[i] < lo[i] || p[i] > hi[i])
            return false;
    return true;
}

Point AffineMap::apply(const Point& x) const {
    Point y(out_dim());
    for (std::size_t r = 0; r < out_dim(); ++r)
        y[r] = dot_coeffs(A[r], x) + b[r];
    return y;
}

AffineConstraint ge(std::vector<Int> coeffs, Int constant) {
    return {std::move(coeffs), std::move(constant), Kind::GE};
}

AffineConstraint eq(std::vector<Int> coeffs, Int constant) {
    return {std::move(coeffs), std::move(constant), Kind::EQ};
}

DivConstraint divides(Int modulus, std::vector<Int> coeffs, Int constant) {
    return {std::move(coeffs), std::move(constant), std::move(modulus)};
}

ISet make_set(std::size_t dim, std::vector<AffineConstraint> ineqs, std::vector<DivConstraint> divs) {
    Cell c{dim, std::move(ineqs), std::move(divs)};
    for (const auto& a : c.ineqs)
        if (a.coeffs.size() != dim)
            throw Error("make_set: constraint arity does not match dim");
    for (const auto& d : c.divs)
        if (d.coeffs.size() != dim)
            throw Error("make_set: divisibility arity does not match dim");
    return canonicalized(ISet{dim, {std::move(c)}});
}

ISet intersect(const ISet& a, const ISet& b) {
    check_same_dim(a, b, "intersect");
    ISet out{a.dim, {}};
    for (const auto& ca : a.cells) {
        for (const auto& cb : b.cells) {
            Cell c;
            c.dim = a.dim;
            c.ineqs = ca.ineqs;
            c.ineqs.insert(c.ineqs.end(), cb.ineqs.begin(), cb.ineqs.end());
            c.divs = ca.divs;
            c.divs.insert(c.divs.end(), cb.divs.begin(), cb.divs.end());
            if (normalize_cell(c) && rationally_feasible(c))
                out.cells.push_back(std::move(c));
        }
    }
    return canonicalized(std::move(out));
}

ISet unite(const ISet& a, const ISet& b) {
    check_same_dim(a, b, "unite");
    ISet out = a;
    out.cells.insert(out.cells.end(), b.cells.begin(), b.cells.end());
    return canonicalized(std::move(out));
}

namespace {

// a \ b for single cells, as a disjoint union: walk b's atoms, branching
// on the first violated one.
std::vector<Cell> cell_minus_cell(const Cell& a, const Cell& b) {
    std::vector<Cell> pieces;
    Cell base = a;
    auto emit = [&](Cell&& piece) {
        if (normalize_cell(piece) && rationally_feasible(piece))
            pieces.push_back(std::move(piece));
    };
    for (const auto& c : b.ineqs) {
        if (c.kind == Kind::GE) {
            Cell piece = base;
            AffineConstraint neg = c;
            for (auto& v : neg.coeffs)
                v = -v;
            neg.constant = -neg.constant - 1;
            piece.ineqs.push_back(std::move(neg));
            emit(std::move(piece));
        } else {
            Cell above = base;
            above.ineqs.push_back(ge(c.coeffs, c.constant - 1)); // expr >= 1
            emit(std::move(above));
            Cell below = base;
            AffineConstraint neg = c;
            neg.kind = Kind::GE;
            for (auto& v : neg.coeffs)
                v = -v;
            neg.constant = -neg.constant - 1; // expr <= -1
            below.ineqs.push_back(std::move(neg));
            emit(std::move(below));
        }
        base.ineqs.push_back(c);
    }
    for (const auto& d : b.divs) {
        for (Int r = 1; r < d.modulus; ++r) {
            Cell piece = base;
            DivConstraint shifted = d;
            shifted.constant -= r;
            piece.divs.push_back(std::move(shifted));
            emit(std::move(piece));
        }
        base.divs.push_back(d);
    }
    return pieces;
}

} // namespace

ISet subtract(const ISet& a, const ISet& b) {
    check_same_dim(a, b, "subtract");
    ISet out{a.dim, {}};
    for (const auto& ca : a.cells) {
        std::vector<Cell> work{ca};
        for (const auto& cb : b.cells) {
            std::vector<Cell> next;
            for (const auto& w : work) {
                auto pieces = cell_minus_cell(w, cb);
                next.insert(next.end(), pieces.begin(), pieces.end());
            }
            work = std::move(next);
            if (work.size() > kCellCap)
                throw UndecidedError("set difference cell blow-up");
            if (work.empty())
                break;
        }
        out.cells.insert(out.cells.end(), work.begin(), work.end());
    }
    return canonicalized(std::move(out));
}

ISet translate(const ISet& s, const std::vector<Int>& v) {
    if (v.size() != s.dim)
        throw Error("translate: vector length does not match dim");
    ISet out = s;
    for (auto& cell : out.cells) {
        for (auto& c : cell.ineqs)
            c.constant -= dot_coeffs(c.coeffs, v);
        for (auto& d : cell.divs)
            d.constant -= dot_coeffs(d.coeffs, v);
    }
    return canonicalized(std::move(out));
}

ISet image(const AffineMap& f, const ISet& s) {
    if (f.in_dim() != s.dim)
        throw Error("image: map input dim " + std::to_string(f.in_dim()) +
                    " does not match set dim " + std::to_string(s.dim));
    if (f.b.size() != f.out_dim())
        throw Error("image: offset length does not match output dim");
    const std::size_t m = f.out_dim(), n = f.in_dim();
    ISet extended{m + n, {}};
    for (const auto& cell : s.cells) {
        Cell c;
        c.dim = m + n;
        for (std::size_t r = 0; r < m; ++r) {
            AffineConstraint e;
            e.kind = Kind::EQ;
            e.coeffs.assign(m + n, 0);
            e.coeffs[r] = 1;
            for (std::size_t j = 0; j < n; ++j)
                e.coeffs[m + j] = -f.A[r][j];
            e.constant = -f.b[r];
            c.ineqs.push_back(std::move(e));
        }
        for (const auto& a : cell.ineqs) {
            AffineConstraint e;
            e.kind = a.kind;
            e.coeffs.assign(m + n, 0);
            for (std::size_t j = 0; j < n; ++j)
                e.coeffs[m + j] = a.coeffs[j];
            e.constant = a.constant;
            c.ineqs.push_back(std::move(e));
        }
        for (const auto& d : cell.divs) {
            DivConstraint e;
            e.coeffs.assign(m + n, 0);
            for (std::size_t j = 0; j < n; ++j)
                e.coeffs[m + j] = d.coeffs[j];
            e.constant = d.constant;
            e.modulus = d.modulus;
            c.divs.push_back(std::move(e));
        }
        extended.cells.push_back(std::move(c));
    }
    return project_out(extended, m, n);
}

ISet project_out(const ISet& s, std::size_t first, std::size_t count) {
    if (first + count > s.dim)
        throw Error("project_out: dimension range out of bounds");
    ISet out{s.dim - count, {}};
    for (const auto& cell : s.cells) {
        std::vector<std::size_t> targets;
        for (std::size_t i = 0; i < count; ++i)
            targets.push_back(first + count - 1 - i);
        project_cell_rec(cell, targets, out.cells);
    }
    return canonicalized(std::move(out));
}

bool is_empty(const ISet& s) {
    for (const auto& cell : s.cells)
        if (!cell_is_empty(cell))
            return false;
    return true;
}

bool equal(const ISet& a, const ISet& b) {
    check_same_dim(a, b, "equal");
    return is_empty(subtract(a, b)) && is_empty(subtract(b, a));
}

bool contains(const ISet& s, const Point& p) {
    if (p.size() != s.dim)
        throw Error("contains: point arity does not match dim");
    for (const auto& cell : s.cells)
        if (cell_contains(cell, p))
            return true;
    return false;
}

std::vector<Point> enumerate(const ISet& s, const Box& box) {
    if (box.lo.size() != s.dim || box.hi.size() != s.dim)
        throw Error("enumerate: box arity does not match dim");
    std::vector<Point> out;
    if (s.dim == 0) {
        if (!is_empty(s))
            out.push_back({});
        return out;
    }
    Int volume = 1;
    for (std::size_t k = 0; k < s.dim; ++k) {
        if (box.lo[k] > box.hi[k])
            return out;
        volume *= box.hi[k] - box.lo[k] + 1;
        if (volume > kEnumVolumeCap)
            throw UndecidedError("enumerate: box too large");
    }
    Point p = box.lo;
    while (true) {
        if (contains(s, p))
            out.push_back(p);
        std::size_t k = s.dim;
        bool done = true;
        while (k > 0) {
            --k;
            if (p[k] < box.hi[k]) {
                ++p[k];
                for (std::size_t j = k + 1; j < s.dim; ++j)
                    p[j] = box.lo[j];
                done = false;
                break;
            }
        }
        if (done)
            break;
    }
    return out;
}

std::optional<Box> bounding_box(const ISet& s) {
    bool any = false;
    Box box;
    for (const auto& cell : s.cells) {
        Cell c = cell;
        if (!normalize_cell(c))
            continue;
        CellBox cb = cell_box(c);
        if (!cb.feasible)
            continue;
        if (!cb.bounded)
            return std::nullopt;
        if (!any) {
            box = cb.box;
            any = true;
        } else {
            for (std::size_t k = 0; k < s.dim; ++k) {
                box.lo[k] = std::min(box.lo[k], cb.box.lo[k]);
                box.hi[k] = std::max(box.hi[k], cb.box.hi[k]);
            }
        }
    }
    if (!any) {
        box.lo.assign(s.dim, 1);
        box.hi.assign(s.dim, 0); // lo > hi: empty
    }
    return box;
}

Point lexmin(const ISet& s) {
    auto bb = bounding_box(s);
    if (!bb)
        throw Error("lexmin: set is unbounded");
    if (s.dim == 0) {
        if (is_empty(s))
            throw Error("lexmin: set is empty");
        return {};
    }
    std::vector<Point> candidates;
    for (const auto& cell : s.cells) {
        Cell c = cell;
        if (!normalize_cell(c))
            continue;
        CellBox cb = cell_box(c);
        if (!cb.feasible)
            continue;
        if (auto p = find_point_in_box(c, cb.box))
            candidates.push_back(*p);
    }
    if (candidates.empty())
        throw Error("lexmin: set is empty");
    return *std::min_element(candidates.begin(), candidates.end());
}

ISet canonicalized(ISet s) {
    std::vector<Cell> kept;
    for (auto& cell : s.cells) {
        if (normalize_cell(cell))
            kept.push_back(std::move(cell));
    }
    std::sort(kept.begin(), kept.end());
    kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
    s.cells = std::move(kept);
    return s;
}

nlohmann::ordered_json to_json(const ISet& s) {
    nlohmann::ordered_json j;
    j["dim"] = s.dim;
    j["cells"] = nlohmann::ordered_json::array();
    for (const auto& cell : s.cells) {
        nlohmann::ordered_json cj;
        cj["ineqs"] = nlohmann::ordered_json::array();
        for (const auto& c : cell.ineqs) {
            nlohmann::ordered_json row = nlohmann::ordered_json::array();
            for (const auto& v : c.coeffs)
                row.push_back(to_ll(v, "ineq coefficient"));
            row.push_back(to_ll(c.constant, "ineq constant"));
            row.push_back(c.kind == Kind::GE ? "ge" : "eq");
            cj["ineqs"].push_back(std::move(row));
        }
        cj["divs"] = nlohmann::ordered_json::array();
        for (const auto& d : cell.divs) {
            nlohmann::ordered_json row = nlohmann::ordered_json::array();
            for (const auto& v : d.coeffs)
                row.push_back(to_ll(v, "div coefficient"));
            row.push_back(to_ll(d.constant, "div constant"));
            row.push_back(to_ll(d.modulus, "div modulus"));
            cj["divs"].push_back(std::move(row));
        }
        j["cells"].push_back(std::move(cj));
    }
    return j;
}

ISet iset_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("dim") || !j.contains("cells"))
        throw ValidationError("set: expected {dim, cells}");
    ISet s;
    s.dim = j.at("dim").get<std::size_t>();
    for (const auto& cj : j.at("cells")) {
        Cell cell;
        cell.dim = s.dim;
        for (const auto& row : cj.at("ineqs")) {
            if (!row.is_array() || row.size() != s.dim + 2)
                throw ValidationError("set cell: ineq row must hold dim coefficients, constant, kind");
            AffineConstraint c;
            for (std::size_t i = 0; i < s.dim; ++i)
                c.coeffs.push_back(checked_int(row[i], "ineq coefficient"));
            c.constant = checked_int(row[s.dim], "ineq constant");
            const auto& kind = row[s.dim + 1];
            if (!kind.is_string() || (kind != "ge" && kind != "eq"))
                throw ValidationError("set cell: ineq kind must be \"ge\" or \"eq\"");
            c.kind = kind == "ge" ? Kind::GE : Kind::EQ;
            cell.ineqs.push_back(std::move(c));
        }
        for (const auto& row : cj.at("divs")) {
            if (!row.is_array() || row.size() != s.dim + 2)
                throw ValidationError("set cell: div row must hold dim coefficients, constant, modulus");
            DivConstraint d;
            for (std::size_t i = 0; i < s.dim; ++i)
                d.coeffs.push_back(checked_int(row[i], "div coefficient"));
            d.constant = checked_int(row[s.dim], "div constant");
            d.modulus = checked_int(row[s.dim + 1], "div modulus");
            if (d.modulus <= 1)
                throw ValidationError("set cell: div modulus must exceed 1");
            cell.divs.push_back(std::move(d));
        }
        s.cells.push_back(std::move(cell));
    }
    return canonicalized(std::move(s));
}

} // namespace mars::iset
