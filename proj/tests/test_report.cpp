// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mars/analysis.hpp"
#include "mars/errors.hpp"
#include "mars/model.hpp"
#include "mars/report.hpp"
#include "mars/svg.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

using namespace mars;

namespace {

const std::string kPrograms = MARS_PROGRAMS_DIR;
const std::string kCli = MARS_CLI_PATH;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct RunResult {
    int exit_code;
    std::string out;
};

RunResult run(const std::string& args) {
    const std::string out_path = "cli_stdout.tmp";
    int rc = std::system((kCli + " " + args + " > " + out_path + " 2> cli_stderr.tmp").c_str());
    RunResult r;
    r.exit_code = WEXITSTATUS(rc);
    r.out = slurp(out_path);
    return r;
}

report::AnalysisResult analyze_file(const std::string& name, report::Options opts = {}) {
    std::string bytes = slurp(kPrograms + "/" + name);
    model::Program p = model::load_program_text(bytes);
    return report::run_analysis(p, bytes, opts);
}

} // namespace

TEST_CASE("reports are byte-stable across runs") {
    for (const char* name : {"single_dep.json", "jacobi_1d.json", "matmul.json"}) {
        auto a = report::to_json(analyze_file(name)).dump(2);
        auto b = report::to_json(analyze_file(name)).dump(2);
        CHECK(a == b);
    }
}

TEST_CASE("report sets round-trip through the serialized form") {
    auto r = analyze_file("jacobi_1d.json");
    REQUIRE(r.partition.has_value());
    auto j = report::to_json(r);
    report::StoredPartition sp = report::partition_from_json(nlohmann::json::parse(j.dump()));
    CHECK(iset::equal(sp.footprint, r.partition->footprint));
    REQUIRE(sp.mars.size() == r.partition->mars.size());
    for (std::size_t i = 0; i < sp.mars.size(); ++i) {
        CHECK(sp.mars[i].signature == r.partition->mars[i].signature);
        CHECK(iset::equal(sp.mars[i].set, r.partition->mars[i].set));
    }
    REQUIRE(sp.offsets.size() == r.partition->offsets.size());
    for (std::size_t i = 0; i < sp.offsets.size(); ++i)
        CHECK(sp.offsets[i].w == r.partition->offsets[i].w);
}

TEST_CASE("the digest tracks the input bytes") {
    auto r1 = analyze_file("single_dep.json");
    auto r2 = analyze_file("jacobi_1d.json");
    CHECK(r1.digest.substr(0, 7) == "sha256:");
    CHECK(r1.digest != r2.digest);
}

TEST_CASE("analysis result fields for the diagonal-pair program") {
    auto r = analyze_file("multi_nullspace.json");
    CHECK(!r.refusal.empty());
    CHECK_FALSE(r.partition.has_value());
    REQUIRE(r.invariance.has_value());
    CHECK_FALSE(r.invariance->pass);
    CHECK(r.invariance->witness.has_value());

    report::Options opts;
    opts.run_fd = true;
    auto rf = analyze_file("multi_nullspace.json", opts);
    CHECK(rf.refusal.empty());
    REQUIRE(rf.fd.has_value());
    CHECK(rf.fd->families.size() >= 3);
}

TEST_CASE("conjecture section appears when the destination is tiled") {
    std::string doc = R"({
      "spaces": [{"name": "S", "dim": 2, "kind": "iteration"},
                 {"name": "A", "dim": 1, "kind": "data"}],
      "deps": [{"source": "S", "target": "A", "A": [[1, 0]], "b": [0]}],
      "tilings": [{"space": "S", "normals": [[1, 1], [-1, 1]], "sizes": [4, 4]},
                  {"space": "A", "normals": [[1]], "sizes": [2]}]
    })";
    model::Program p = model::load_program_text(doc);
    auto r = report::run_analysis(p, doc, {});
    REQUIRE(r.conjecture.has_value());
    CHECK(r.conjecture->satisfied);
}

TEST_CASE("cli: analyze exits 0 and is deterministic") {
    auto a = run("analyze " + kPrograms + "/single_dep.json");
    CHECK(a.exit_code == 0);
    auto b = run("analyze " + kPrograms + "/single_dep.json");
    CHECK(a.out == b.out);
    auto j = nlohmann::json::parse(a.out);
    CHECK(j["schema"] == 1);
    CHECK(j["mars"].size() == 3);
    CHECK(j["offsets"].size() == 3);
    CHECK(j["classification"]["verdict"] == "uniformly-intersecting");
}

TEST_CASE("cli: refusal and input-error exit codes") {
    CHECK(run("analyze " + kPrograms + "/multi_nullspace.json").exit_code == 2);
    CHECK(run("analyze " + kPrograms + "/multi_nullspace.json --fd").exit_code == 0);
    CHECK(run("analyze " + kPrograms + "/no_such_file.json").exit_code == 1);
    CHECK(run("analyze " + kPrograms + "/single_dep.json --dest NoSpace").exit_code == 1);
}

TEST_CASE("cli: verify agrees and flags corrupted reports") {
    auto v = run("verify " + kPrograms + "/jacobi_1d.json");
    CHECK(v.exit_code == 0);
    CHECK(v.out.find("agree") != std::string::npos);

    // store a report, corrupt one MARS cell constant, verify against it
    REQUIRE(run("analyze " + kPrograms + "/jacobi_1d.json --out report_ok.tmp.json").exit_code == 0);
    auto doc = nlohmann::json::parse(slurp("report_ok.tmp.json"));
    auto& row = doc["mars"][0]["set"]["cells"][0]["ineqs"][0];
    row[row.size() - 2] = row[row.size() - 2].get<long long>() + 1;
    std::ofstream("report_bad.tmp.json") << doc.dump(2);
    auto bad = run("verify " + kPrograms + "/jacobi_1d.json --against report_bad.tmp.json");
    CHECK(bad.exit_code == 3);
    auto good = run("verify " + kPrograms + "/jacobi_1d.json --against report_ok.tmp.json");
    CHECK(good.exit_code == 0);
}

TEST_CASE("cli: render writes a deterministic svg with the signature legend") {
    auto r1 = run("render " + kPrograms + "/jacobi_1d.json --svg out1.tmp.svg");
    CHECK(r1.exit_code == 0);
    auto r2 = run("render " + kPrograms + "/jacobi_1d.json --svg out2.tmp.svg");
    CHECK(r2.exit_code == 0);
    std::string svg = slurp("out1.tmp.svg");
    CHECK(svg == slurp("out2.tmp.svg"));
    CHECK(svg.rfind("<svg", 0) == 0);
    // one legend row per MARS (11 at size 4), plus the heading line
    std::size_t rows = 0, pos = 0;
    while ((pos = svg.find("font-size=\"13\"", pos)) != std::string::npos) {
        ++rows;
        pos += 1;
    }
    CHECK(rows == 11);

    // 1-D destination renders as a strip
    CHECK(run("render " + kPrograms + "/single_dep.json --svg out3.tmp.svg").exit_code == 0);
    // 3-D source is unsupported
    CHECK(run("render " + kPrograms + "/matmul.json --svg out4.tmp.svg").exit_code == 1);
}

TEST_CASE("svg rendering is stable through the library interface") {
    model::Program p = model::load_program_file(kPrograms + "/jacobi_1d.json");
    analysis::Deps deps;
    for (const auto* d : p.deps_into("A"))
        deps.push_back(*d);
    auto part = analysis::build_mars(deps, *p.tiling_of("S"));
    std::string a = svg::render(p, "A", part);
    std::string b = svg::render(p, "A", part);
    CHECK(a == b);
    CHECK(a.find("MARS signatures") != std::string::npos);
}
