// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mars/analysis.hpp"
#include "mars/errors.hpp"
#include "mars/model.hpp"

#include <algorithm>
#include <set>
#include <string>

using namespace mars;
using namespace mars::analysis;

namespace {

const std::string kPrograms = MARS_PROGRAMS_DIR;

std::vector<Int> iv(std::vector<long long> v) { return std::vector<Int>(v.begin(), v.end()); }

linalg::RatVector rvec(std::vector<Rational> e) { return linalg::RatVector(std::move(e)); }

struct Loaded {
    model::Program program;
    Deps deps;
    model::TilingSpec tiling;
};

Loaded load(const std::string& name, const std::string& dest) {
    Loaded out{model::load_program_file(kPrograms + "/" + name), {}, {}};
    for (const auto* d : out.program.deps_into(dest))
        out.deps.push_back(*d);
    out.tiling = *out.program.tiling_of(out.deps[0].source);
    return out;
}

model::AffineFn dep2to1(std::vector<long long> row, long long b) {
    model::AffineFn d;
    d.source = "S";
    d.target = "A";
    d.map.A = {iv(row)};
    d.map.b = {Int(b)};
    return d;
}

std::set<std::vector<Int>> delta_set(const std::vector<OffsetFamily>& fams) {
    std::set<std::vector<Int>> out;
    for (const auto& f : fams)
        out.insert(f.example_delta);
    return out;
}

} // namespace

TEST_CASE("classification covers all four regimes") {
    Loaded jacobi = load("jacobi_1d.json", "A");
    CHECK(classify(jacobi.deps).verdict == Verdict::Uniform);

    Loaded multi = load("multi_nullspace.json", "A");
    DepClass dc = classify(multi.deps);
    CHECK(dc.verdict == Verdict::MultipleNullSpaces);
    REQUIRE(dc.kernels.size() == 2);
    CHECK(dc.kernels[0].vectors[0] == rvec({1, 1}));
    CHECK(dc.kernels[1].vectors[0] == rvec({1, -1}));

    Deps shifted{dep2to1({1, 0}, 0), dep2to1({1, 0}, 1)};
    CHECK(classify(shifted).verdict == Verdict::UniformlyIntersecting);

    Deps shared{dep2to1({1, 0}, 0), dep2to1({2, 0}, 0)};
    CHECK(classify(shared).verdict == Verdict::SharedNullSpace);

    Deps mixed{dep2to1({1, 0}, 0)};
    mixed.push_back(dep2to1({1, 0}, 0));
    mixed.back().target = "S";
    CHECK_THROWS_AS(classify(mixed), Error);
}

TEST_CASE("combined footprint of the skewed single dependence") {
    Loaded ex = load("single_dep.json", "A");
    iset::ISet f = combined_footprint(ex.deps, ex.tiling, iv({0, 0}));
    // {i : -4 < 2i < 4}
    iset::ISet expected = iset::make_set(1, {iset::ge(iv({2}), 3), iset::ge(iv({-2}), 3)});
    CHECK(iset::equal(f, expected));
}

TEST_CASE("combined footprint of an identity dependence is the tile") {
    model::AffineFn id;
    id.source = "S";
    id.target = "A";
    id.map.A = {iv({1, 0}), iv({0, 1})};
    id.map.b = iv({0, 0});
    model::TilingSpec canon{"S", {iv({1, 0}), iv({0, 1})}, iv({4, 4})};
    iset::ISet f = combined_footprint({id}, canon, iv({1, 0}));
    CHECK(iset::equal(f, model::tile_set(canon, iv({1, 0}))));
}

TEST_CASE("unbounded footprints are refused") {
    model::AffineFn id;
    id.source = "S";
    id.target = "A";
    id.map.A = {iv({1, 0}), iv({0, 1})};
    id.map.b = iv({0, 0});
    model::TilingSpec slab{"S", {iv({1, 1})}, iv({4})};
    CHECK_THROWS_AS(combined_footprint({id}, slab, iv({0})), RefusalError);
}

TEST_CASE("bounded footprints from slab tiles are fine") {
    // one hyperplane, but the dependence collapses the unbounded direction
    model::AffineFn sum;
    sum.source = "S";
    sum.target = "A";
    sum.map.A = {iv({1, 1})};
    sum.map.b = iv({0});
    model::TilingSpec slab{"S", {iv({1, 1})}, iv({4})};
    iset::ISet f = combined_footprint({sum}, slab, iv({0}));
    iset::Box box{iv({-20}), iv({20})};
    CHECK(iset::enumerate(f, box).size() == 4);
    auto fams = offset_families({sum}, slab);
    CHECK(fams.size() == 1); // only the tile itself reaches its footprint
}

TEST_CASE("offset families of the skewed single dependence") {
    Loaded ex = load("single_dep.json", "A");
    auto fams = offset_families(ex.deps, ex.tiling);
    REQUIRE(fams.size() == 3);
    CHECK(fams[0].w == rvec({0, 0})); // zero family first
    std::set<linalg::RatVector> ws;
    for (const auto& f : fams)
        ws.insert(f.w);
    CHECK(ws.count(rvec({2, 0})));
    CHECK(ws.count(rvec({-2, 0})));
    // representatives live on the i0 axis of tile coordinates
    CHECK(delta_set(fams) ==
          std::set<std::vector<Int>>{iv({0, 0}), iv({1, 0}), iv({-1, 0})});
    // image shifts are A.p
    for (const auto& f : fams) {
        REQUIRE(f.image_shift.dim() == 1);
        CHECK(f.image_shift[0] == f.w[0]);
    }
}

TEST_CASE("offset families of the stencil match the printed list") {
    Loaded jy = load("jacobi_1d.json", "A");
    auto fams = offset_families(jy.deps, jy.tiling);
    REQUIRE(fams.size() == 7);
    CHECK(delta_set(fams) == std::set<std::vector<Int>>{
                                 iv({0, 0}), iv({-1, 0}), iv({0, 1}), iv({-1, 1}),
                                 iv({1, 0}), iv({0, -1}), iv({1, -1})});
}

TEST_CASE("the blocked matrix access has a single family") {
    Loaded mm = load("matmul.json", "A");
    auto fams = offset_families(mm.deps, mm.tiling);
    REQUIRE(fams.size() == 1);
    CHECK(fams[0].w == rvec({0, 0, 0}));
}

TEST_CASE("widening the search box never adds a family") {
    for (const char* name : {"single_dep.json", "jacobi_1d.json", "matmul.json"}) {
        Loaded ex = load(name, "A");
        auto base = offset_search(ex.deps, ex.tiling, 0);
        auto wide = offset_search(ex.deps, ex.tiling, 2);
        CHECK(delta_set(base.families) == delta_set(wide.families));
    }
}

TEST_CASE("offset families refuse the multiple-null-space regime") {
    Loaded multi = load("multi_nullspace.json", "A");
    CHECK_THROWS_AS(offset_families(multi.deps, multi.tiling), RefusalError);
}

TEST_CASE("invariance holds for the worked examples") {
    Loaded ex = load("single_dep.json", "A");
    auto v = verify_invariance(ex.deps, ex.tiling,
                               {iv({0, 0}), iv({3, -2}), iv({5, 5})});
    CHECK(v.pass);

    Loaded jy = load("jacobi_1d.json", "A");
    CHECK(verify_invariance(jy.deps, jy.tiling, default_samples(2)).pass);
}

TEST_CASE("invariance fails with a concrete witness on the diagonal pair") {
    Loaded multi = load("multi_nullspace.json", "A");
    auto v = verify_invariance(multi.deps, multi.tiling, default_samples(2));
    REQUIRE_FALSE(v.pass);
    REQUIRE(v.witness.has_value());
    // the witness states a verified claim about the two footprints
    CHECK(v.witness->detail.find("not translates") != std::string::npos);
}

TEST_CASE("shared kernels with different linear parts still break invariance") {
    Deps shared{dep2to1({1, 0}, 0), dep2to1({2, 0}, 0)};
    model::TilingSpec canon{"S", {iv({1, 0}), iv({0, 1})}, iv({2, 2})};
    auto v = verify_invariance(shared, canon, default_samples(2));
    REQUIRE_FALSE(v.pass);
    CHECK(v.witness.has_value());
    CHECK_THROWS_AS(build_mars(shared, canon), RefusalError);
}

TEST_CASE("MARS of the skewed single dependence are the three printed sets") {
    Loaded ex = load("single_dep.json", "A");
    MarsPartition p = build_mars(ex.deps, ex.tiling);
    REQUIRE(p.mars.size() == 3);
    CHECK(p.invariance.pass);

    // s(i0-i1) < 2i < s(i0-i1+1), s(i0-i1-1) < 2i < s(i0-i1), 2i = s(i0-i1)
    iset::ISet upper = iset::make_set(1, {iset::ge(iv({2}), -1), iset::ge(iv({-2}), 3)});
    iset::ISet lower = iset::make_set(1, {iset::ge(iv({2}), 3), iset::ge(iv({-2}), -1)});
    iset::ISet center = iset::make_set(1, {iset::eq(iv({2}), 0)});

    // the center point is consumed only by the tiles of the zero family;
    // each side point also by one neighbouring family
    bool saw_upper = false, saw_lower = false, saw_center = false;
    for (const auto& m : p.mars) {
        if (m.signature.size() == 1) {
            CHECK(m.signature == std::vector<std::size_t>{0});
            CHECK(iset::equal(m.set, center));
            saw_center = true;
        } else {
            REQUIRE(m.signature.size() == 2);
            if (iset::equal(m.set, upper))
                saw_upper = true;
            if (iset::equal(m.set, lower))
                saw_lower = true;
        }
    }
    CHECK(saw_upper);
    CHECK(saw_lower);
    CHECK(saw_center);
}

TEST_CASE("the refinement matches the direct subset formula") {
    Loaded ex = load("single_dep.json", "A");
    MarsPartition p = build_mars(ex.deps, ex.tiling);
    OffsetSearch search = offset_search(ex.deps, ex.tiling);
    iset::ISet F = p.footprint;

    std::vector<iset::ISet> psi;
    for (const auto& f : search.families) {
        iset::ISet u = iset::ISet::empty_set(F.dim);
        for (const auto& d : ex.deps)
            u = iset::unite(u, iset::image(d.map, model::tile_set(ex.tiling, f.example_delta)));
        psi.push_back(iset::intersect(u, F));
    }

    std::size_t checked = 0;
    const std::size_t n = search.families.size();
    for (std::size_t mask = 1; mask < (std::size_t(1) << n); ++mask) {
        if (!(mask & 1))
            continue; // the zero family consumes every footprint point
        iset::ISet mc = F;
        for (std::size_t f = 0; f < n; ++f) {
            if (mask & (std::size_t(1) << f))
                mc = iset::intersect(mc, psi[f]);
            else
                mc = iset::subtract(mc, psi[f]);
        }
        std::vector<std::size_t> sig;
        for (std::size_t f = 0; f < n; ++f)
            if (mask & (std::size_t(1) << f))
                sig.push_back(f);
        auto it = std::find_if(p.mars.begin(), p.mars.end(),
                               [&](const MarsSet& m) { return m.signature == sig; });
        if (it == p.mars.end()) {
            CHECK(iset::is_empty(mc));
        } else {
            CHECK(iset::equal(mc, it->set));
            ++checked;
        }
    }
    CHECK(checked == p.mars.size());
}

TEST_CASE("partition laws hold symbolically on the stencil") {
    Loaded jy = load("jacobi_1d.json", "A");
    MarsPartition p = build_mars(jy.deps, jy.tiling);
    REQUIRE(p.mars.size() >= 2);
    iset::ISet all = iset::ISet::empty_set(p.footprint.dim);
    for (std::size_t i = 0; i < p.mars.size(); ++i) {
        CHECK_FALSE(iset::is_empty(p.mars[i].set));
        for (std::size_t j = i + 1; j < p.mars.size(); ++j)
            CHECK(iset::is_empty(iset::intersect(p.mars[i].set, p.mars[j].set)));
        all = iset::unite(all, p.mars[i].set);
    }
    CHECK(iset::equal(all, p.footprint));
}

TEST_CASE("the blocked matrix access yields one data-block MARS") {
    Loaded mm = load("matmul.json", "A");
    MarsPartition p = build_mars(mm.deps, mm.tiling);
    REQUIRE(p.mars.size() == 1);
    iset::ISet block = iset::make_set(2, {iset::ge(iv({1, 0}), 0), iset::ge(iv({-1, 0}), 3),
                                          iset::ge(iv({0, 1}), 0), iset::ge(iv({0, -1}), 3)});
    CHECK(iset::equal(p.mars[0].set, block));
    CHECK(p.mars[0].signature == std::vector<std::size_t>{0});
}

TEST_CASE("MARS at a translated tile are translates of the reference MARS") {
    for (const char* name : {"single_dep.json", "jacobi_1d.json"}) {
        Loaded ex = load(name, "A");
        MarsPartition base = build_mars(ex.deps, ex.tiling);
        auto nhat = model::scaled_normals(ex.tiling);
        for (auto tile : {iv({2, -1}), iv({-1, 3}), iv({4, 4})}) {
            BuildOptions bo;
            bo.tile = tile;
            MarsPartition moved = build_mars(ex.deps, ex.tiling, bo);
            linalg::RatVector sigma(nhat[0].dim());
            for (std::size_t j = 0; j < nhat.size(); ++j)
                sigma = sigma + Rational(tile[j]) * nhat[j];
            linalg::RatMatrix A(ex.deps[0].map.A.size(), ex.deps[0].map.A[0].size());
            for (std::size_t r = 0; r < ex.deps[0].map.A.size(); ++r)
                for (std::size_t c = 0; c < ex.deps[0].map.A[r].size(); ++c)
                    A.at(r, c) = Rational(ex.deps[0].map.A[r][c]);
            linalg::RatVector shift = A.apply(sigma);
            REQUIRE(shift.is_integral());
            REQUIRE(moved.mars.size() == base.mars.size());
            for (std::size_t i = 0; i < base.mars.size(); ++i) {
                CHECK(moved.mars[i].signature == base.mars[i].signature);
                CHECK(iset::equal(moved.mars[i].set,
                                  iset::translate(base.mars[i].set, shift.to_int())));
            }
        }
    }
}

TEST_CASE("build refuses the multiple-null-space regime and the blow-up guard") {
    Loaded multi = load("multi_nullspace.json", "A");
    CHECK_THROWS_AS(build_mars(multi.deps, multi.tiling), RefusalError);

    Loaded jy = load("jacobi_1d.json", "A");
    BuildOptions bo;
    bo.max_families = 3; // the stencil needs 7
    CHECK_THROWS_AS(build_mars(jy.deps, jy.tiling, bo), RefusalError);
}

TEST_CASE("consumer families of the diagonal pair") {
    Loaded multi = load("multi_nullspace.json", "A");
    FDPartitionReport r = fd_partition(multi.deps, multi.tiling, 3);
    std::set<std::vector<std::size_t>> seen;
    for (const auto& fam : r.families)
        seen.insert(fam.deps);
    CHECK(seen.count({0}));
    CHECK(seen.count({1}));
    CHECK(seen.count({0, 1}));
    // tiles are assigned to exactly one family
    std::set<std::vector<Int>> all_tiles;
    std::size_t total = 0;
    for (const auto& fam : r.families) {
        total += fam.tiles.size();
        for (const auto& t : fam.tiles)
            all_tiles.insert(t);
    }
    CHECK(all_tiles.size() == total);
}

TEST_CASE("a single dependence puts every consumer tile in one family") {
    Loaded ex = load("single_dep.json", "A");
    FDPartitionReport r = fd_partition(ex.deps, ex.tiling, 2);
    REQUIRE(r.families.size() == 1);
    CHECK(r.families[0].deps == std::vector<std::size_t>{0});
    // finitely many W values: overlap needs |i0 - i1| <= 1, so three
    // distinct projections
    CHECK(r.families[0].w_values[0].size() == 3);
}

TEST_CASE("stencil consumer families follow the printed consumer lists") {
    Loaded jy = load("jacobi_1d.json", "A");
    FDPartitionReport r = fd_partition(jy.deps, jy.tiling, 3);
    // consumer tiles per dependence at the reference tile
    std::set<std::vector<Int>> V1 = {iv({0, -1}), iv({0, 0}), iv({1, -1}), iv({1, 0})};
    std::set<std::vector<Int>> V2 = {iv({0, 0}), iv({1, 0}), iv({0, -1}), iv({-1, 0}), iv({0, 1})};
    std::set<std::vector<Int>> V3 = {iv({0, 0}), iv({-1, 0}), iv({0, 1}), iv({-1, 1})};
    auto expected_D = [&](const std::vector<Int>& t) {
        std::vector<std::size_t> d;
        if (V1.count(t))
            d.push_back(0);
        if (V2.count(t))
            d.push_back(1);
        if (V3.count(t))
            d.push_back(2);
        return d;
    };
    std::set<std::vector<Int>> seen_tiles;
    for (const auto& fam : r.families) {
        for (const auto& t : fam.tiles) {
            CHECK(fam.deps == expected_D(t));
            seen_tiles.insert(t);
        }
    }
    // every tile in any V list was found
    for (const auto& t : V2)
        CHECK(seen_tiles.count(t));
    for (const auto& t : V1)
        CHECK(seen_tiles.count(t));
    for (const auto& t : V3)
        CHECK(seen_tiles.count(t));
}

TEST_CASE("tiled-destination condition on the three check cases") {
    // identical canonical tilings, identity dependence: diagonal passes
    model::AffineFn id;
    id.source = "S";
    id.target = "A";
    id.map.A = {iv({1, 0}), iv({0, 1})};
    id.map.b = iv({0, 0});
    model::TilingSpec src{"S", {iv({1, 0}), iv({0, 1})}, iv({4, 4})};
    model::TilingSpec dst{"A", {iv({1, 0}), iv({0, 1})}, iv({4, 4})};
    ConjectureReport r1 = tiled_destination_condition({id}, src, dst);
    CHECK(r1.satisfied);
    for (const auto& t : r1.triples) {
        if (t.source_hp == t.dest_hp) {
            CHECK(t.status == TripleStatus::Pass);
            CHECK(*t.multiplier == 1);
        } else {
            CHECK(t.status == TripleStatus::OrthogonalSkipped);
        }
    }

    // skewed source, 1-D destination with size 2: dot 2, m = 1
    Loaded ex = load("single_dep.json", "A");
    model::TilingSpec line2{"A", {iv({1})}, iv({2})};
    ConjectureReport r2 = tiled_destination_condition(ex.deps, ex.tiling, line2);
    CHECK(r2.satisfied);
    CHECK(r2.triples[0].status == TripleStatus::Pass);
    CHECK(*r2.triples[0].multiplier == 1);
    CHECK(r2.triples[0].dot == Rational(2));

    // size 3 cannot be reached by steps of 2
    model::TilingSpec line3{"A", {iv({1})}, iv({3})};
    ConjectureReport r3 = tiled_destination_condition(ex.deps, ex.tiling, line3);
    CHECK_FALSE(r3.satisfied);
    CHECK(r3.triples[0].status == TripleStatus::Fail);
}
