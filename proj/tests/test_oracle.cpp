// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mars/analysis.hpp"
#include "mars/errors.hpp"
#include "mars/model.hpp"
#include "mars/oracle.hpp"
#include "mars/report.hpp"

#include <string>

using namespace mars;

namespace {

const std::string kPrograms = MARS_PROGRAMS_DIR;

std::vector<Int> iv(std::vector<long long> v) { return std::vector<Int>(v.begin(), v.end()); }

model::Program load(const std::string& name) {
    return model::load_program_file(kPrograms + "/" + name);
}

analysis::Deps deps_of(const model::Program& p, const std::string& dest) {
    analysis::Deps out;
    for (const auto* d : p.deps_into(dest))
        out.push_back(*d);
    return out;
}

std::vector<oracle::Point> points_of(std::vector<std::vector<long long>> pts) {
    std::vector<oracle::Point> out;
    for (auto& p : pts)
        out.push_back(iv(p));
    return out;
}

} // namespace

TEST_CASE("footprint of the skewed tile on the data line") {
    model::Program p = load("single_dep.json");
    auto pts = oracle::oracle_footprint(p.dependences[0], p.tilings[0], iv({0, 0}), 10);
    CHECK(pts == points_of({{-1}, {0}, {1}}));
}

TEST_CASE("footprint of an identity dependence is the tile itself") {
    std::string doc = R"({
      "spaces": [{"name": "S", "dim": 2, "kind": "iteration"},
                 {"name": "A", "dim": 2, "kind": "data"}],
      "deps": [{"source": "S", "target": "A", "A": [[1, 0], [0, 1]], "b": [0, 0]}],
      "tilings": [{"space": "S", "normals": [[1, 0], [0, 1]], "sizes": [3, 3]}]
    })";
    model::Program p = model::load_program_text(doc);
    auto pts = oracle::oracle_footprint(p.dependences[0], p.tilings[0], iv({1, 0}), 20);
    REQUIRE(pts.size() == 9);
    CHECK(pts.front() == iv({3, 0}));
    CHECK(pts.back() == iv({5, 2}));
}

TEST_CASE("footprint of the blocked matrix access is the 4x4 block") {
    model::Program p = load("matmul.json");
    auto pts = oracle::oracle_footprint(p.dependences[0], p.tilings[0], iv({0, 0, 0}), 10);
    CHECK(pts.size() == 16);
    for (const auto& pt : pts) {
        CHECK(pt[0] >= 0);
        CHECK(pt[0] < 4);
        CHECK(pt[1] >= 0);
        CHECK(pt[1] < 4);
    }
}

TEST_CASE("oracle footprints bind the symbolic image on the corpus") {
    for (const char* name : {"single_dep.json", "jacobi_1d.json", "multi_nullspace.json", "matmul.json"}) {
        model::Program p = load(name);
        const auto& tiling = p.tilings[0];
        std::vector<std::vector<Int>> tiles;
        if (tiling.hyperplanes() == 2)
            tiles = {iv({0, 0}), iv({1, 0}), iv({-1, 2})};
        else
            tiles = {iv({0, 0, 0}), iv({1, -1, 0})};
        for (const auto& dep : p.dependences) {
            for (const auto& t : tiles) {
                auto brute = oracle::oracle_footprint(dep, tiling, t, 40);
                iset::ISet img = iset::image(dep.map, model::tile_set(tiling, t));
                iset::Box box{std::vector<Int>(dep.map.out_dim(), Int(-40)),
                              std::vector<Int>(dep.map.out_dim(), Int(40))};
                CHECK(iset::enumerate(img, box) == brute);
            }
        }
    }
}

TEST_CASE("oracle footprints see image strides") {
    std::string doc = R"({
      "spaces": [{"name": "S", "dim": 1, "kind": "iteration"},
                 {"name": "A", "dim": 1, "kind": "data"}],
      "deps": [{"source": "S", "target": "A", "A": [[2]], "b": [1]}],
      "tilings": [{"space": "S", "normals": [[1]], "sizes": [4]}]
    })";
    model::Program p = model::load_program_text(doc);
    auto pts = oracle::oracle_footprint(p.dependences[0], p.tilings[0], iv({0}), 20);
    CHECK(pts == points_of({{1}, {3}, {5}, {7}}));
    iset::ISet img = iset::image(p.dependences[0].map, model::tile_set(p.tilings[0], iv({0})));
    CHECK(iset::enumerate(img, iset::Box{iv({-20}), iv({20})}) == pts);
}

TEST_CASE("oracle grouping reproduces the three skewed MARS") {
    model::Program p = load("single_dep.json");
    auto grouping = oracle::oracle_mars(p, "A", 3, std::nullopt);
    REQUIRE(grouping.groups.size() == 3);
    std::vector<oracle::Point> all;
    for (const auto& [sig, pts] : grouping.groups)
        all.insert(all.end(), pts.begin(), pts.end());
    std::sort(all.begin(), all.end());
    CHECK(all == points_of({{-1}, {0}, {1}}));
}

TEST_CASE("oracle grouping has the seven stencil offsets") {
    model::Program p = load("jacobi_1d.json");
    auto grouping = oracle::oracle_mars(p, "A", 3, std::nullopt);
    // tile offsets seen across signatures, mapped through W = identity
    std::set<std::vector<Int>> offsets;
    analysis::Deps deps = deps_of(p, "A");
    auto fams = analysis::offset_families(deps, p.tilings[0]);
    CHECK(fams.size() == 7);
    // each oracle point's signature must induce a known family set
    auto agreement = report::compare_with_oracle(
        p, "A", analysis::build_mars(deps, p.tilings[0]), grouping);
    CHECK(agreement.agree);
}

TEST_CASE("symbolic MARS agree with the oracle on the corpus programs") {
    for (const char* name : {"single_dep.json", "jacobi_1d.json", "matmul.json"}) {
        model::Program p = load(name);
        analysis::Deps deps = deps_of(p, "A");
        analysis::MarsPartition part = analysis::build_mars(deps, p.tilings[0]);
        for (long long radius : {3, 4}) {
            auto grouping = oracle::oracle_mars(p, "A", radius, std::nullopt);
            auto agreement = report::compare_with_oracle(p, "A", part, grouping);
            INFO(name, " radius ", radius);
            for (const auto& line : agreement.table)
                INFO(line);
            CHECK(agreement.agree);
        }
    }
}

TEST_CASE("widening the oracle box does not change the grouping") {
    for (const char* name : {"single_dep.json", "jacobi_1d.json"}) {
        model::Program p = load(name);
        auto g3 = oracle::oracle_mars(p, "A", 3, std::nullopt);
        auto g4 = oracle::oracle_mars(p, "A", 4, std::nullopt);
        REQUIRE(g3.groups.size() == g4.groups.size());
        // same partition of points; signatures may gain far-away tiles
        std::vector<std::vector<oracle::Point>> p3, p4;
        for (const auto& [s, pts] : g3.groups)
            p3.push_back(pts);
        for (const auto& [s, pts] : g4.groups)
            p4.push_back(pts);
        std::sort(p3.begin(), p3.end());
        std::sort(p4.begin(), p4.end());
        CHECK(p3 == p4);
    }
}

TEST_CASE("no dependences means an empty grouping") {
    std::string doc = R"({
      "spaces": [{"name": "S", "dim": 2, "kind": "iteration"},
                 {"name": "A", "dim": 1, "kind": "data"}],
      "deps": [], "tilings": [{"space": "S", "normals": [[1, 0], [0, 1]], "sizes": [2, 2]}]
    })";
    model::Program p = model::load_program_text(doc);
    CHECK(oracle::oracle_mars(p, "A", 2, std::nullopt).groups.empty());
}

TEST_CASE("a too-small data box is an explicit error") {
    model::Program p = load("matmul.json");
    CHECK_THROWS_AS(oracle::oracle_mars(p, "A", 2, Int(1)), ValidationError);
}

TEST_CASE("rank-deficient tilings are rejected by the oracle") {
    std::string doc = R"({
      "spaces": [{"name": "S", "dim": 2, "kind": "iteration"},
                 {"name": "A", "dim": 1, "kind": "data"}],
      "deps": [{"source": "S", "target": "A", "A": [[1, 1]], "b": [0]}],
      "tilings": [{"space": "S", "normals": [[1, 1]], "sizes": [4]}]
    })";
    model::Program p = model::load_program_text(doc);
    CHECK_THROWS_AS(oracle::oracle_mars(p, "A", 2, std::nullopt), ValidationError);
}
