// SPDX-License-Identifier: Apache-2.0

#include "mars/oracle.hpp"

#include "mars/errors.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace mars::oracle {

namespace {

Int dot(const std::vector<Int>& a, const Point& x) {
    Int s = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * x[i];
    return s;
}

// Local exact Gauss solve; the oracle stays independent of the linalg
// module on purpose.
std::vector<Rational> solve_local(std::vector<std::vector<Rational>> M, std::vector<Rational> rhs) {
    const std::size_t n = M.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t p = col;
        while (p < n && M[p][col] == 0)
            ++p;
        if (p == n)
            throw Error("oracle: singular normal matrix");
        std::swap(M[p], M[col]);
        std::swap(rhs[p], rhs[col]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || M[r][col] == 0)
                continue;
            Rational f = M[r][col] / M[col][col];
            for (std::size_t c = col; c < n; ++c)
                M[r][c] -= f * M[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<Rational> x(n);
    for (std::size_t r = 0; r < n; ++r)
        x[r] = rhs[r] / M[r][r];
    return x;
}

struct Scan {
    std::vector<Int> lo, hi;
};

// Source-space box guaranteed to contain every tile with coordinates in
// [-r, r]^t. Requires as many hyperplanes as dimensions (bounded tiles).
Scan source_scan_box(const model::TilingSpec& tiling, const Int& r) {
    const std::size_t t = tiling.hyperplanes();
    const std::size_t d = tiling.normals[0].size();
    if (t != d)
        throw ValidationError("oracle: the tiling must have as many hyperplanes as the space has "
                              "dimensions (bounded tiles)");
    // x in a scanned tile means x.n_j in [-r s_j, (r+1) s_j); invert the
    // normal matrix and propagate the phase intervals per coordinate
    std::vector<std::vector<Rational>> inv_cols(d);
    for (std::size_t c = 0; c < d; ++c) {
        std::vector<std::vector<Rational>> N(t, std::vector<Rational>(d));
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t j = 0; j < d; ++j)
                N[i][j] = Rational(tiling.normals[i][j]);
        std::vector<Rational> e(t, 0);
        e[c] = 1;
        inv_cols[c] = solve_local(std::move(N), std::move(e)); // column c of N^-1
    }
    Scan out;
    out.lo.resize(d);
    out.hi.resize(d);
    for (std::size_t a = 0; a < d; ++a) {
        Rational lo = 0, hi = 0;
        for (std::size_t j = 0; j < t; ++j) {
            Rational coeff = inv_cols[j][a]; // x_a = sum_j (N^-1)_{a j} w_j
            Rational wlo = Rational(-r * tiling.sizes[j]);
            Rational whi = Rational((r + 1) * tiling.sizes[j]);
            if (coeff >= 0) {
                lo += coeff * wlo;
                hi += coeff * whi;
            } else {
                lo += coeff * whi;
                hi += coeff * wlo;
            }
        }
        out.lo[a] = rat_floor(lo);
        out.hi[a] = rat_ceil(hi);
    }
    return out;
}

// Tile coordinates of a point: floor of each hyperplane phase.
TileCoord tile_of(const model::TilingSpec& tiling, const Point& x) {
    TileCoord t(tiling.hyperplanes());
    for (std::size_t j = 0; j < tiling.hyperplanes(); ++j)
        t[j] = floor_div(dot(tiling.normals[j], x), tiling.sizes[j]);
    return t;
}

bool in_radius(const TileCoord& t, const Int& r) {
    for (const auto& v : t)
        if (v < -r || v > r)
            return false;
    return true;
}

template <typename F> void scan_points(const Scan& box, F&& visit) {
    const std::size_t d = box.lo.size();
    Point p = box.lo;
    for (std::size_t a = 0; a < d; ++a)
        if (box.lo[a] > box.hi[a])
            return;
    while (true) {
        visit(p);
        std::size_t k = d;
        bool done = true;
        while (k > 0) {
            --k;
            if (p[k] < box.hi[k]) {
                ++p[k];
                for (std::size_t j = k + 1; j < d; ++j)
                    p[j] = box.lo[j];
                done = false;
                break;
            }
        }
        if (done)
            break;
    }
}

} // namespace

SignatureGrouping oracle_mars(const model::Program& program, const std::string& dest_space,
                              const Int& tile_radius, const std::optional<Int>& data_radius) {
    auto deps = program.deps_into(dest_space);
    SignatureGrouping out;
    if (deps.empty())
        return out;
    const std::string source = deps[0]->source;
    for (const auto* d : deps)
        if (d->source != source)
            throw ValidationError("oracle: dependences into '" + dest_space +
                                  "' have mixed source spaces");
    const model::TilingSpec* tiling = program.tiling_of(source);
    if (!tiling)
        throw ValidationError("oracle: source space '" + source + "' has no tiling");

    Scan box = source_scan_box(*tiling, tile_radius);

    // pass 1: the reference tile's footprint
    std::set<Point> footprint;
    const TileCoord zero(tiling->hyperplanes(), 0);
    scan_points(box, [&](const Point& x) {
        if (tile_of(*tiling, x) != zero)
            return;
        for (const auto* d : deps) {
            Point y = d->map.apply(x);
            if (data_radius) {
                for (const auto& v : y)
                    if (v < -*data_radius || v > *data_radius)
                        throw ValidationError("oracle: data box radius " + data_radius->str() +
                                              " is too small to contain the footprint");
            }
            footprint.insert(std::move(y));
        }
    });

    // pass 2: which tiles consume each footprint point
    std::map<Point, std::set<TileCoord>> sig;
    scan_points(box, [&](const Point& x) {
        TileCoord t = tile_of(*tiling, x);
        if (!in_radius(t, tile_radius))
            return;
        for (const auto* d : deps) {
            Point y = d->map.apply(x);
            if (footprint.count(y))
                sig[y].insert(t);
        }
    });

    std::map<std::vector<TileCoord>, std::vector<Point>> groups;
    for (auto& [y, tiles] : sig)
        groups[std::vector<TileCoord>(tiles.begin(), tiles.end())].push_back(y);
    for (auto& [signature, points] : groups) {
        std::sort(points.begin(), points.end());
        out.groups.emplace_back(signature, std::move(points));
    }
    return out;
}

std::vector<Point> oracle_footprint(const model::AffineFn& dep, const model::TilingSpec& tiling,
                                    const TileCoord& t, const Int& data_radius) {
    if (t.size() != tiling.hyperplanes())
        throw Error("oracle_footprint: tile arity does not match hyperplane count");
    Int r = 0;
    for (const auto& v : t)
        if (Int a = abs(v); a > r)
            r = a;
    Scan box = source_scan_box(tiling, r);
    std::set<Point> pts;
    scan_points(box, [&](const Point& x) {
        if (tile_of(tiling, x) != t)
            return;
        Point y = dep.map.apply(x);
        for (const auto& v : y)
            if (v < -data_radius || v > data_radius)
                return; // clipped to the data box
        pts.insert(std::move(y));
    });
    return {pts.begin(), pts.end()};
}

} // namespace mars::oracle
