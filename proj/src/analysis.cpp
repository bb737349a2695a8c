// SPDX-License-Identifier: Apache-2.0

#include "mars/analysis.hpp"

#include "mars/errors.hpp"

#include <algorithm>
#include <map>

namespace mars::analysis {

namespace {

using linalg::RatMatrix;
using linalg::RatVector;
using linalg::SubspaceBasis;

RatMatrix to_rat_matrix(const std::vector<std::vector<Int>>& A) {
    if (A.empty())
        return RatMatrix(0, 0);
    RatMatrix m(A.size(), A[0].size());
    for (std::size_t r = 0; r < A.size(); ++r)
        for (std::size_t c = 0; c < A[r].size(); ++c)
            m.at(r, c) = Rational(A[r][c]);
    return m;
}

bool lex_less(const RatVector& a, const RatVector& b) {
    for (std::size_t i = 0; i < a.dim(); ++i) {
        if (a[i] != b[i])
            return a[i] < b[i];
    }
    return false;
}

// sum_j delta_j nhat_j
RatVector tile_shift(const std::vector<RatVector>& nhat, const std::vector<Int>& delta) {
    RatVector s(nhat[0].dim());
    for (std::size_t j = 0; j < nhat.size(); ++j)
        s = s + Rational(delta[j]) * nhat[j];
    return s;
}

void check_family(const Deps& deps) {
    if (deps.empty())
        throw Error("dependence family is empty");
    for (const auto& d : deps) {
        if (d.source != deps[0].source)
            throw Error("dependences have mixed source spaces");
        if (d.target != deps[0].target)
            throw Error("dependences have mixed target spaces");
    }
}

void check_tiling(const Deps& deps, const model::TilingSpec& tiling) {
    if (tiling.space != deps[0].source)
        throw Error("tiling is on space '" + tiling.space + "' but dependences originate from '" +
                    deps[0].source + "'");
}

// Column Hermite-style reduction: returns the unimodular U with M U in
// column echelon form, plus the number of nonzero echelon columns. The
// trailing columns of U span the integer kernel lattice of M.
struct ColumnEchelon {
    std::vector<std::vector<Int>> U; // t x t, column-major (U[c] is a column)
    std::size_t rank = 0;
};

ColumnEchelon column_echelon(std::vector<std::vector<Int>> H_cols) {
    const std::size_t t = H_cols.size();
    const std::size_t m = t ? H_cols[0].size() : 0;
    ColumnEchelon out;
    out.U.assign(t, std::vector<Int>(t, 0));
    for (std::size_t c = 0; c < t; ++c)
        out.U[c][c] = 1;

    std::size_t col = 0;
    for (std::size_t row = 0; row < m && col < t; ++row) {
        while (true) {
            std::size_t best = t;
            for (std::size_t c = col; c < t; ++c) {
                if (H_cols[c][row] == 0)
                    continue;
                if (best == t || Int(abs(H_cols[c][row])) < Int(abs(H_cols[best][row])))
                    best = c;
            }
            if (best == t)
                break; // row is zero on the remaining columns
            if (best != col) {
                std::swap(H_cols[best], H_cols[col]);
                std::swap(out.U[best], out.U[col]);
            }
            bool reduced = true;
            for (std::size_t c = col + 1; c < t; ++c) {
                if (H_cols[c][row] == 0)
                    continue;
                Int q = H_cols[c][row] / H_cols[col][row];
                for (std::size_t r = 0; r < m; ++r)
                    H_cols[c][r] -= q * H_cols[col][r];
                for (std::size_t r = 0; r < t; ++r)
                    out.U[c][r] -= q * out.U[col][r];
                if (H_cols[c][row] != 0)
                    reduced = false;
            }
            if (reduced) {
                ++col;
                break;
            }
        }
        if (col == t)
            break;
    }
    out.rank = col;
    return out;
}

// Rational bounding interval of each destination coordinate of one
// dependence's image of the (relaxed) reference tile. The tile relaxes
// to the box prod [0, s_j] in hyperplane-phase coordinates, where bounds
// of any functional in the normals' row span are attained at corners.
struct RatBox {
    std::vector<Rational> lo, hi;
};

RatBox rational_image_box(const model::AffineFn& dep, const model::TilingSpec& tiling) {
    const std::size_t t = tiling.hyperplanes();
    const std::size_t d = tiling.normals[0].size();
    const std::size_t m = dep.map.out_dim();
    RatMatrix N(t, d), G(t, t);
    for (std::size_t r = 0; r < t; ++r)
        for (std::size_t c = 0; c < d; ++c)
            N.at(r, c) = Rational(tiling.normals[r][c]);
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < t; ++j) {
            Rational s = 0;
            for (std::size_t c = 0; c < d; ++c)
                s += N.at(i, c) * N.at(j, c);
            G.at(i, j) = s;
        }
    RatBox out;
    out.lo.resize(m);
    out.hi.resize(m);
    for (std::size_t r = 0; r < m; ++r) {
        RatVector f(d);
        for (std::size_t c = 0; c < d; ++c)
            f[c] = Rational(dep.map.A[r][c]);
        // decompose f over the normals: f = sum gamma_j n_j
        RatVector Nf(t);
        for (std::size_t j = 0; j < t; ++j) {
            Rational s = 0;
            for (std::size_t c = 0; c < d; ++c)
                s += N.at(j, c) * f[c];
            Nf[j] = s;
        }
        RatVector gamma = linalg::solve(G, Nf);
        RatVector back(d);
        for (std::size_t j = 0; j < t; ++j) {
            RatVector nj(d);
            for (std::size_t c = 0; c < d; ++c)
                nj[c] = Rational(tiling.normals[j][c]);
            back = back + gamma[j] * nj;
        }
        if (!(back == f))
            throw RefusalError("unbounded footprint: dependence row is not spanned by the tiling normals");
        Rational lo = Rational(dep.map.b[r]), hi = lo;
        for (std::size_t j = 0; j < t; ++j) {
            Rational span = gamma[j] * Rational(tiling.sizes[j]);
            if (span > 0)
                hi += span;
            else
                lo += span;
        }
        out.lo[r] = lo;
        out.hi[r] = hi;
    }
    return out;
}

std::vector<Int> add_vec(const std::vector<Int>& a, const std::vector<Int>& b) {
    std::vector<Int> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        r[i] = a[i] + b[i];
    return r;
}

} // namespace

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::Uniform:
        return "uniform";
    case Verdict::UniformlyIntersecting:
        return "uniformly-intersecting";
    case Verdict::SharedNullSpace:
        return "shared-null-space";
    case Verdict::MultipleNullSpaces:
        return "multiple-null-spaces";
    }
    return "?";
}

DepClass classify(const Deps& deps) {
    check_family(deps);
    DepClass out;
    std::vector<const std::vector<std::vector<Int>>*> distinct;
    for (const auto& d : deps) {
        bool seen = false;
        for (const auto* a : distinct)
            if (*a == d.map.A)
                seen = true;
        if (!seen)
            distinct.push_back(&d.map.A);
    }
    for (const auto* a : distinct)
        out.kernels.push_back(linalg::kernel_basis(to_rat_matrix(*a)));

    if (distinct.size() == 1) {
        RatMatrix A = to_rat_matrix(*distinct[0]);
        out.verdict = A.is_identity() ? Verdict::Uniform : Verdict::UniformlyIntersecting;
        return out;
    }
    bool shared = true;
    for (std::size_t i = 1; i < out.kernels.size(); ++i)
        if (!linalg::same_span(out.kernels[0], out.kernels[i]))
            shared = false;
    out.verdict = shared ? Verdict::SharedNullSpace : Verdict::MultipleNullSpaces;
    return out;
}

iset::ISet combined_footprint(const Deps& deps, const model::TilingSpec& tiling,
                              const std::vector<Int>& t) {
    check_family(deps);
    check_tiling(deps, tiling);
    iset::ISet ts = model::tile_set(tiling, t);
    iset::ISet out = iset::ISet::empty_set(deps[0].map.out_dim());
    for (const auto& d : deps)
        out = iset::unite(out, iset::image(d.map, ts));
    if (!iset::bounding_box(out))
        throw RefusalError("unbounded footprint: the finiteness of consumer-tile representatives "
                           "requires bounded tiles");
    return out;
}

// Exact overlap test for one consumer tile: preferably pointwise over
// the (bounded) tile, falling back to the symbolic sets for slab tiles.
namespace {

struct OverlapTester {
    const Deps* deps = nullptr;
    const model::TilingSpec* tiling = nullptr;
    iset::ISet footprint;                 // reference combined footprint
    std::set<iset::Point> footprint_pts;  // pointwise view, when bounded
    bool pointwise = false;

    void init(const Deps& d, const model::TilingSpec& t, const iset::ISet& f0,
              const iset::Box& f0box) {
        deps = &d;
        tiling = &t;
        footprint = f0;
        iset::ISet tile0 = model::tile_set(t, std::vector<Int>(t.hyperplanes(), 0));
        if (iset::bounding_box(tile0)) {
            pointwise = true;
            for (auto& p : iset::enumerate(f0, f0box))
                footprint_pts.insert(std::move(p));
        }
    }

    bool overlaps(const std::vector<Int>& delta) const {
        iset::ISet tile = model::tile_set(*tiling, delta);
        if (pointwise) {
            auto box = iset::bounding_box(tile);
            for (const auto& x : iset::enumerate(tile, *box))
                for (const auto& dep : *deps)
                    if (footprint_pts.count(dep.map.apply(x)))
                        return true;
            return false;
        }
        for (const auto& dep : *deps) {
            iset::ISet fd = iset::image(dep.map, tile);
            if (!iset::is_empty(iset::intersect(fd, footprint)))
                return true;
        }
        return false;
    }
};

} // namespace

OffsetSearch offset_search(const Deps& deps, const model::TilingSpec& tiling, std::size_t margin) {
    DepClass dc = classify(deps);
    check_tiling(deps, tiling);
    if (dc.verdict == Verdict::MultipleNullSpaces)
        throw RefusalError("dependences have multiple distinct null spaces; offset families are "
                           "not defined (run the consumer-family diagnostic instead)");

    const std::size_t t = tiling.hyperplanes();
    const std::size_t m = deps[0].map.out_dim();
    const SubspaceBasis& kernel = dc.kernels[0];
    SubspaceBasis suppl = linalg::supplementary_basis(kernel);
    std::vector<RatVector> nhat = model::scaled_normals(tiling);
    RatMatrix A0 = to_rat_matrix(deps[0].map.A);

    iset::ISet F0 = combined_footprint(deps, tiling, std::vector<Int>(t, 0));
    iset::Box f0box = *iset::bounding_box(F0);
    OverlapTester overlap;
    overlap.init(deps, tiling, F0, f0box);

    // per-coordinate shift window: a consumer's image shift must keep
    // some dependence's footprint box touching the reference box
    std::vector<Rational> Jlo(m), Jhi(m);
    bool first = true;
    for (const auto& d : deps) {
        RatBox rb = rational_image_box(d, tiling);
        for (std::size_t c = 0; c < m; ++c) {
            Rational lo = Rational(f0box.lo[c]) - rb.hi[c];
            Rational hi = Rational(f0box.hi[c]) - rb.lo[c];
            if (first || lo < Jlo[c])
                Jlo[c] = lo;
            if (first || hi > Jhi[c])
                Jhi[c] = hi;
        }
        first = false;
    }

    // integer shift matrix: column j = Dn * A nhat_j
    std::vector<RatVector> shift_cols;
    Int Dn = 1;
    for (std::size_t j = 0; j < t; ++j) {
        shift_cols.push_back(A0.apply(nhat[j]));
        for (std::size_t c = 0; c < m; ++c)
            Dn = lcm(Dn, denominator(shift_cols.back()[c]));
    }
    std::vector<std::vector<Int>> M_cols(t, std::vector<Int>(m));
    for (std::size_t j = 0; j < t; ++j)
        for (std::size_t c = 0; c < m; ++c)
            M_cols[j][c] = numerator(Rational(shift_cols[j][c] * Dn));

    ColumnEchelon ech = column_echelon(M_cols);
    OffsetSearch out;
    for (std::size_t c = ech.rank; c < t; ++c)
        out.kernel_deltas.push_back(ech.U[c]);

    const std::size_t rprime = ech.rank;
    std::vector<std::vector<Int>> C(ech.U.begin(), ech.U.begin() + rprime);

    // polytope of gamma whose shift lands in the window J
    std::vector<std::vector<Int>> MC(rprime, std::vector<Int>(m, 0)); // column-major
    for (std::size_t j = 0; j < rprime; ++j)
        for (std::size_t c = 0; c < m; ++c) {
            Int s = 0;
            for (std::size_t k = 0; k < t; ++k)
                s += M_cols[k][c] * C[j][k];
            MC[j][c] = s;
        }
    std::vector<iset::AffineConstraint> cs;
    for (std::size_t c = 0; c < m; ++c) {
        // Dn-scaled: Jlo_c * Dn <= (MC gamma)_c <= Jhi_c * Dn
        Rational lo = Jlo[c] * Dn, hi = Jhi[c] * Dn;
        std::vector<Int> row(rprime);
        for (std::size_t j = 0; j < rprime; ++j)
            row[j] = MC[j][c];
        std::vector<Int> pos = row, neg = row;
        for (auto& v : neg)
            v = -v;
        cs.push_back(iset::ge(std::move(pos), -rat_ceil(lo))); // row.gamma >= ceil(lo)
        cs.push_back(iset::ge(std::move(neg), rat_floor(hi))); // row.gamma <= floor(hi)
    }
    iset::ISet poly = iset::make_set(rprime, std::move(cs));
    std::optional<iset::Box> gbox = iset::bounding_box(poly);
    if (!gbox)
        throw Error("internal: offset search polytope is unbounded");
    iset::Box box = *gbox;
    for (std::size_t j = 0; j < rprime; ++j) {
        box.lo[j] -= Int(margin);
        box.hi[j] += Int(margin);
        if (box.lo[j] > 0)
            box.lo[j] = 0;
        if (box.hi[j] < 0)
            box.hi[j] = 0;
    }

    // greedy infinity-norm reduction of a representative modulo the
    // delta-kernel lattice, so reports and oracle boxes stay small
    auto reduce_delta = [&](std::vector<Int> delta) {
        auto norm = [](const std::vector<Int>& v) {
            Int n = 0;
            for (const auto& x : v)
                if (Int a = abs(x); a > n)
                    n = a;
            return n;
        };
        bool improved = true;
        while (improved) {
            improved = false;
            for (const auto& k : out.kernel_deltas) {
                for (int sgn : {1, -1}) {
                    std::vector<Int> cand(t);
                    for (std::size_t j = 0; j < t; ++j)
                        cand[j] = delta[j] + sgn * k[j];
                    if (norm(cand) < norm(delta)) {
                        delta = std::move(cand);
                        improved = true;
                    }
                }
            }
        }
        return delta;
    };

    std::vector<OffsetFamily> families;
    std::vector<Int> gamma(rprime);
    auto consider = [&](const std::vector<Int>& g) {
        std::vector<Int> delta(t, 0);
        for (std::size_t j = 0; j < rprime; ++j)
            for (std::size_t k = 0; k < t; ++k)
                delta[k] += g[j] * C[j][k];
        delta = reduce_delta(std::move(delta));
        if (!overlap.overlaps(delta))
            return;
        RatVector sigma = tile_shift(nhat, delta);
        OffsetFamily fam;
        fam.w = linalg::project_onto(suppl, sigma);
        fam.example_delta = delta;
        fam.image_shift = A0.apply(sigma);
        families.push_back(std::move(fam));
    };
    if (rprime == 0) {
        consider(gamma);
    } else {
        gamma = box.lo;
        while (true) {
            consider(gamma);
            std::size_t k = rprime;
            bool done = true;
            while (k > 0) {
                --k;
                if (gamma[k] < box.hi[k]) {
                    ++gamma[k];
                    for (std::size_t j = k + 1; j < rprime; ++j)
                        gamma[j] = box.lo[j];
                    done = false;
                    break;
                }
            }
            if (done)
                break;
        }
    }

    std::sort(families.begin(), families.end(), [](const OffsetFamily& a, const OffsetFamily& b) {
        if (a.is_zero() != b.is_zero())
            return a.is_zero();
        return lex_less(a.w, b.w);
    });
    if (families.empty() || !families.front().is_zero())
        throw Error("internal: zero offset family missing");
    out.families = std::move(families);
    return out;
}

std::vector<OffsetFamily> offset_families(const Deps& deps, const model::TilingSpec& tiling) {
    return offset_search(deps, tiling).families;
}

std::vector<std::vector<Int>> default_samples(std::size_t t_dims) {
    std::vector<std::vector<Int>> out;
    out.emplace_back(t_dims, 0);
    std::vector<Int> a(t_dims, 0);
    a[0] = 1;
    out.push_back(a);
    std::vector<Int> b(t_dims, 0);
    b[0] = -1;
    if (t_dims > 1)
        b[1] = 2;
    out.push_back(b);
    return out;
}

InvarianceVerdict verify_invariance(const Deps& deps, const model::TilingSpec& tiling,
                                    const std::vector<std::vector<Int>>& samples) {
    DepClass dc = classify(deps);
    check_tiling(deps, tiling);
    const std::size_t t = tiling.hyperplanes();
    std::vector<RatVector> nhat = model::scaled_normals(tiling);

    std::vector<std::vector<Int>> candidates;
    if (dc.verdict != Verdict::MultipleNullSpaces) {
        OffsetSearch search = offset_search(deps, tiling);
        for (const auto& f : search.families)
            if (!f.is_zero())
                candidates.push_back(f.example_delta);
        for (const auto& k : search.kernel_deltas)
            candidates.push_back(k);
    } else {
        // unit shell around the reference tile
        std::vector<Int> d(t, -1);
        while (true) {
            if (!std::all_of(d.begin(), d.end(), [](const Int& v) { return v == 0; }))
                candidates.push_back(d);
            std::size_t k = t;
            bool done = true;
            while (k > 0) {
                --k;
                if (d[k] < 1) {
                    ++d[k];
                    for (std::size_t j = k + 1; j < t; ++j)
                        d[j] = -1;
                    done = false;
                    break;
                }
            }
            if (done)
                break;
        }
    }

    // bounded tiles let every footprint be handled as an explicit point
    // set; slab tiles keep the symbolic route
    const bool pointwise =
        iset::bounding_box(model::tile_set(tiling, std::vector<Int>(t, 0))).has_value();

    auto footprint_pts = [&](const std::vector<Int>& at) {
        iset::ISet tile = model::tile_set(tiling, at);
        std::set<iset::Point> pts;
        for (const auto& x : iset::enumerate(tile, *iset::bounding_box(tile)))
            for (const auto& d : deps)
                pts.insert(d.map.apply(x));
        return pts;
    };
    auto shifted = [](const std::set<iset::Point>& pts, const std::vector<Int>& u) {
        std::set<iset::Point> out;
        for (const auto& p : pts)
            out.insert(add_vec(p, u));
        return out;
    };

    InvarianceVerdict verdict;
    for (const auto& sample : samples) {
        if (sample.size() != t)
            throw Error("verify_invariance: sample arity does not match hyperplane count");
        std::set<iset::Point> Fpts;
        iset::ISet F = iset::ISet::empty_set(deps[0].map.out_dim());
        if (pointwise)
            Fpts = footprint_pts(sample);
        else
            F = combined_footprint(deps, tiling, sample);
        for (const auto& delta : candidates) {
            std::set<iset::Point> F2pts;
            iset::ISet F2 = iset::ISet::empty_set(F.dim);
            if (pointwise)
                F2pts = footprint_pts(add_vec(sample, delta));
            else
                F2 = combined_footprint(deps, tiling, add_vec(sample, delta));
            RatVector sigma = tile_shift(nhat, delta);

            // candidate destination shift: must be one vector, integral,
            // common to every dependence
            bool single = true;
            RatVector shift = to_rat_matrix(deps[0].map.A).apply(sigma);
            for (std::size_t i = 1; i < deps.size(); ++i) {
                if (!(to_rat_matrix(deps[i].map.A).apply(sigma) == shift))
                    single = false;
            }
            std::string detail;
            if (single && shift.is_integral()) {
                bool same = pointwise ? F2pts == shifted(Fpts, shift.to_int())
                                      : iset::equal(F2, iset::translate(F, shift.to_int()));
                if (same)
                    continue;
                detail = "footprint of the translated tile differs from the footprint translated "
                         "by the dependence shift";
            } else if (!single) {
                detail = "dependences translate their footprints by different destination shifts";
            } else {
                detail = "dependence shift is not an integer vector";
            }
            // strengthen the witness: is it a translate by anything at all?
            bool e1 = pointwise ? Fpts.empty() : iset::is_empty(F);
            bool e2 = pointwise ? F2pts.empty() : iset::is_empty(F2);
            if (e1 && e2)
                continue;
            if (e1 != e2) {
                detail += "; one footprint is empty and the other is not";
            } else {
                iset::Point m1 = pointwise ? *Fpts.begin() : iset::lexmin(F);
                iset::Point m2 = pointwise ? *F2pts.begin() : iset::lexmin(F2);
                iset::Point u(m1.size());
                for (std::size_t i = 0; i < m1.size(); ++i)
                    u[i] = m2[i] - m1[i];
                bool translate_exists = pointwise ? F2pts == shifted(Fpts, u)
                                                  : iset::equal(F2, iset::translate(F, u));
                if (translate_exists)
                    detail += "; the footprints are translates, but not by the dependence shift";
                else
                    detail += "; the footprints are not translates of each other";
            }
            verdict.pass = false;
            verdict.witness = InvarianceWitness{sample, delta, detail};
            return verdict;
        }
    }
    verdict.pass = true;
    return verdict;
}

MarsPartition build_mars(const Deps& deps, const model::TilingSpec& tiling, const BuildOptions& opts) {
    const std::size_t t = tiling.hyperplanes();
    std::vector<Int> tile = opts.tile.empty() ? std::vector<Int>(t, 0) : opts.tile;
    OffsetSearch search = offset_search(deps, tiling);

    std::vector<std::vector<Int>> samples = default_samples(t);
    bool seen = false;
    for (const auto& s : samples)
        if (s == tile)
            seen = true;
    if (!seen)
        samples.push_back(tile);
    InvarianceVerdict inv = verify_invariance(deps, tiling, samples);
    return build_mars(deps, tiling, opts, search, inv);
}

MarsPartition build_mars(const Deps& deps, const model::TilingSpec& tiling, const BuildOptions& opts,
                         const OffsetSearch& search, const InvarianceVerdict& inv) {
    DepClass dc = classify(deps);
    check_tiling(deps, tiling);
    if (dc.verdict == Verdict::MultipleNullSpaces)
        throw RefusalError("dependences have multiple distinct null spaces; MARS construction "
                           "requires a shared null space (run the consumer-family diagnostic "
                           "instead)");
    const std::size_t t = tiling.hyperplanes();
    std::vector<Int> tile = opts.tile.empty() ? std::vector<Int>(t, 0) : opts.tile;
    if (tile.size() != t)
        throw Error("build_mars: tile arity does not match hyperplane count");

    if (opts.max_families > 62)
        throw Error("build_mars: max_families must be at most 62");
    if (search.families.size() > opts.max_families)
        throw RefusalError("offset family count " + std::to_string(search.families.size()) +
                           " exceeds the limit " + std::to_string(opts.max_families) +
                           " (2^|P| subsets would blow up)");

    if (!inv.pass) {
        std::string msg = "footprints are not invariant by tile translation";
        if (inv.witness)
            msg += " (tile " + mars::to_string(inv.witness->tile) + ", offset " +
                   mars::to_string(inv.witness->delta) + ": " + inv.witness->detail + ")";
        throw RefusalError(msg);
    }

    iset::ISet F = combined_footprint(deps, tiling, tile);

    // refine the footprint by each family's consumed subset; the mask
    // identifies exactly which families consume each piece
    std::vector<std::pair<std::uint64_t, iset::ISet>> pieces;
    pieces.emplace_back(0, F);
    for (std::size_t fi = 0; fi < search.families.size(); ++fi) {
        std::vector<Int> at = add_vec(tile, search.families[fi].example_delta);
        iset::ISet psi = iset::ISet::empty_set(F.dim);
        for (const auto& d : deps)
            psi = iset::unite(psi, iset::image(d.map, model::tile_set(tiling, at)));
        psi = iset::intersect(psi, F);
        std::vector<std::pair<std::uint64_t, iset::ISet>> next;
        for (auto& [mask, piece] : pieces) {
            iset::ISet in = iset::intersect(piece, psi);
            if (!iset::is_empty(in))
                next.emplace_back(mask | (std::uint64_t(1) << fi), std::move(in));
            iset::ISet outp = iset::subtract(piece, psi);
            if (!iset::is_empty(outp))
                next.emplace_back(mask, std::move(outp));
        }
        pieces = std::move(next);
    }

    std::map<std::uint64_t, iset::ISet> merged;
    for (auto& [mask, piece] : pieces) {
        auto it = merged.find(mask);
        if (it == merged.end())
            merged.emplace(mask, std::move(piece));
        else
            it->second = iset::unite(it->second, piece);
    }

    MarsPartition part;
    part.destination = deps[0].target;
    part.tile = tile;
    part.footprint = F;
    part.offsets = search.families;
    part.invariance = inv;
    for (auto& [mask, set] : merged) {
        if (!(mask & 1))
            throw Error("internal: footprint point not consumed by the reference tile");
        MarsSet ms;
        for (std::size_t fi = 0; fi < search.families.size(); ++fi)
            if (mask & (std::uint64_t(1) << fi))
                ms.signature.push_back(fi);
        ms.set = iset::canonicalized(std::move(set));
        part.mars.push_back(std::move(ms));
    }
    std::sort(part.mars.begin(), part.mars.end(), [](const MarsSet& a, const MarsSet& b) {
        if (a.signature.size() != b.signature.size())
            return a.signature.size() < b.signature.size();
        return a.signature < b.signature;
    });

    if (opts.exclude_self) {
        const std::size_t d = tiling.normals[0].size();
        if (F.dim != d)
            throw ValidationError("exclude-self requires the destination space to have the same "
                                  "dimension as the tiled source space");
        iset::ISet self = model::tile_set(tiling, tile);
        std::vector<MarsSet> kept;
        for (auto& m : part.mars)
            if (!iset::is_empty(iset::subtract(m.set, self)))
                kept.push_back(std::move(m));
        part.mars = std::move(kept);
    }
    return part;
}

FDPartitionReport fd_partition(const Deps& deps, const model::TilingSpec& tiling, const Int& box_radius) {
    check_family(deps);
    check_tiling(deps, tiling);
    const std::size_t t = tiling.hyperplanes();
    std::vector<RatVector> nhat = model::scaled_normals(tiling);
    iset::ISet F0 = combined_footprint(deps, tiling, std::vector<Int>(t, 0));
    const bool pointwise =
        iset::bounding_box(model::tile_set(tiling, std::vector<Int>(t, 0))).has_value();
    std::set<iset::Point> f0pts;
    if (pointwise)
        for (auto& p : iset::enumerate(F0, *iset::bounding_box(F0)))
            f0pts.insert(std::move(p));

    std::vector<SubspaceBasis> suppl;
    for (const auto& d : deps)
        suppl.push_back(linalg::supplementary_basis(linalg::kernel_basis(to_rat_matrix(d.map.A))));

    FDPartitionReport report;
    report.box_radius = box_radius;
    std::map<std::vector<std::size_t>, FDFamily> families;

    std::vector<Int> tp(t, -box_radius);
    while (true) {
        std::vector<std::size_t> D;
        if (pointwise) {
            iset::ISet tile = model::tile_set(tiling, tp);
            auto pts = iset::enumerate(tile, *iset::bounding_box(tile));
            std::vector<bool> hit(deps.size(), false);
            for (const auto& x : pts)
                for (std::size_t i = 0; i < deps.size(); ++i)
                    if (!hit[i] && f0pts.count(deps[i].map.apply(x)))
                        hit[i] = true;
            for (std::size_t i = 0; i < deps.size(); ++i)
                if (hit[i])
                    D.push_back(i);
        } else {
            for (std::size_t i = 0; i < deps.size(); ++i) {
                iset::ISet fd = iset::image(deps[i].map, model::tile_set(tiling, tp));
                if (!iset::is_empty(iset::intersect(fd, F0)))
                    D.push_back(i);
            }
        }
        if (!D.empty()) {
            auto [it, fresh] = families.try_emplace(D);
            FDFamily& fam = it->second;
            if (fresh) {
                fam.deps = D;
                fam.w_values.resize(D.size());
            }
            fam.tiles.push_back(tp);
            RatVector sigma = tile_shift(nhat, tp);
            for (std::size_t k = 0; k < D.size(); ++k) {
                RatVector w = linalg::project_onto(suppl[D[k]], sigma);
                auto& ws = fam.w_values[k];
                if (std::find(ws.begin(), ws.end(), w) == ws.end())
                    ws.push_back(w);
            }
        }
        std::size_t k = t;
        bool done = true;
        while (k > 0) {
            --k;
            if (tp[k] < box_radius) {
                ++tp[k];
                for (std::size_t j = k + 1; j < t; ++j)
                    tp[j] = -box_radius;
                done = false;
                break;
            }
        }
        if (done)
            break;
    }

    for (auto& [key, fam] : families) {
        for (auto& ws : fam.w_values)
            std::sort(ws.begin(), ws.end(), lex_less);
        report.families.push_back(std::move(fam));
    }
    std::sort(report.families.begin(), report.families.end(), [](const FDFamily& a, const FDFamily& b) {
        if (a.deps.size() != b.deps.size())
            return a.deps.size() < b.deps.size();
        return a.deps < b.deps;
    });
    return report;
}

ConjectureReport tiled_destination_condition(const Deps& deps, const model::TilingSpec& source_tiling,
                                             const model::TilingSpec& dest_tiling) {
    check_family(deps);
    check_tiling(deps, source_tiling);
    if (dest_tiling.space != deps[0].target)
        throw Error("destination tiling is on space '" + dest_tiling.space +
                    "' but dependences target '" + deps[0].target + "'");
    std::vector<RatVector> nhat = model::scaled_normals(source_tiling);
    ConjectureReport report;
    for (std::size_t i = 0; i < deps.size(); ++i) {
        RatMatrix A = to_rat_matrix(deps[i].map.A);
        for (std::size_t j = 0; j < source_tiling.hyperplanes(); ++j) {
            RatVector An = A.apply(nhat[j]);
            for (std::size_t k = 0; k < dest_tiling.hyperplanes(); ++k) {
                ConjectureTriple triple;
                triple.dep = i;
                triple.source_hp = j;
                triple.dest_hp = k;
                Rational c = 0;
                for (std::size_t x = 0; x < An.dim(); ++x)
                    c += An[x] * Rational(dest_tiling.normals[k][x]);
                triple.dot = c;
                if (c == 0) {
                    triple.status = TripleStatus::OrthogonalSkipped;
                } else {
                    Rational mrat = Rational(dest_tiling.sizes[k]) / c;
                    if (is_integral(mrat)) {
                        triple.status = TripleStatus::Pass;
                        triple.multiplier = numerator(mrat);
                    } else {
                        triple.status = TripleStatus::Fail;
                        report.satisfied = false;
                    }
                }
                report.triples.push_back(std::move(triple));
            }
        }
    }
    return report;
}

} // namespace mars::analysis
