// SPDX-License-Identifier: Apache-2.0

#include "mars/model.hpp"

#include "mars/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace mars::model {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ValidationError(path + ": " + msg);
}

Int get_int(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number_integer())
        fail(path, "expected an integer");
    return Int(j.get<long long>());
}

std::vector<Int> get_int_vector(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array())
        fail(path, "expected an array of integers");
    std::vector<Int> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(get_int(j[i], path + "/" + std::to_string(i)));
    return out;
}

} // namespace

const Space& Program::space(const std::string& name) const {
    for (const auto& s : spaces)
        if (s.name == name)
            return s;
    throw ValidationError("unknown space '" + name + "'");
}

const TilingSpec* Program::tiling_of(const std::string& space) const {
    for (const auto& t : tilings)
        if (t.space == space)
            return &t;
    return nullptr;
}

std::vector<const AffineFn*> Program::deps_into(const std::string& target) const {
    std::vector<const AffineFn*> out;
    for (const auto& d : dependences)
        if (d.target == target)
            out.push_back(&d);
    return out;
}

std::vector<std::string> Program::destination_spaces() const {
    std::vector<std::string> out;
    for (const auto& d : dependences)
        if (std::find(out.begin(), out.end(), d.target) == out.end())
            out.push_back(d.target);
    return out;
}

Program load_program(const nlohmann::json& doc) {
    if (!doc.is_object())
        fail("/", "expected a JSON object");
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (key != "spaces" && key != "deps" && key != "tilings")
            fail("/" + key, "unknown key");
    }
    Program p;

    if (!doc.contains("spaces") || !doc["spaces"].is_array() || doc["spaces"].empty())
        fail("/spaces", "expected a non-empty array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < doc["spaces"].size(); ++i) {
        const std::string path = "/spaces/" + std::to_string(i);
        const auto& sj = doc["spaces"][i];
        if (!sj.is_object() || !sj.contains("name") || !sj.contains("dim") || !sj.contains("kind"))
            fail(path, "expected {name, dim, kind}");
        Space s;
        s.name = sj["name"].get<std::string>();
        if (!names.insert(s.name).second)
            fail(path + "/name", "duplicate space name '" + s.name + "'");
        Int dim = get_int(sj["dim"], path + "/dim");
        if (dim < 1)
            fail(path + "/dim", "dim must be >= 1");
        s.dim = dim.convert_to<std::size_t>();
        const std::string kind = sj["kind"].get<std::string>();
        if (kind == "iteration")
            s.kind = SpaceKind::Iteration;
        else if (kind == "data")
            s.kind = SpaceKind::Data;
        else
            fail(path + "/kind", "kind must be \"iteration\" or \"data\"");
        if (sj.contains("bounds")) {
            const auto& bj = sj["bounds"];
            if (!bj.is_object() || !bj.contains("lo") || !bj.contains("hi"))
                fail(path + "/bounds", "expected {lo, hi}");
            iset::Box box;
            box.lo = get_int_vector(bj["lo"], path + "/bounds/lo");
            box.hi = get_int_vector(bj["hi"], path + "/bounds/hi");
            if (box.lo.size() != s.dim || box.hi.size() != s.dim)
                fail(path + "/bounds", "bounds arity must match dim");
            s.bounds = std::move(box);
        }
        p.spaces.push_back(std::move(s));
    }

    if (!doc.contains("deps") || !doc["deps"].is_array())
        fail("/deps", "expected an array");
    for (std::size_t i = 0; i < doc["deps"].size(); ++i) {
        const std::string path = "/deps/" + std::to_string(i);
        const auto& dj = doc["deps"][i];
        if (!dj.is_object() || !dj.contains("source") || !dj.contains("target") ||
            !dj.contains("A") || !dj.contains("b"))
            fail(path, "expected {source, target, A, b}");
        AffineFn d;
        d.source = dj["source"].get<std::string>();
        d.target = dj["target"].get<std::string>();
        if (!names.count(d.source))
            fail(path + "/source", "unknown space '" + d.source + "'");
        if (!names.count(d.target))
            fail(path + "/target", "unknown space '" + d.target + "'");
        const Space& src = p.space(d.source);
        const Space& dst = p.space(d.target);
        if (!dj["A"].is_array() || dj["A"].size() != dst.dim)
            fail(path + "/A", "expected " + std::to_string(dst.dim) + " rows");
        for (std::size_t r = 0; r < dj["A"].size(); ++r) {
            auto row = get_int_vector(dj["A"][r], path + "/A/" + std::to_string(r));
            if (row.size() != src.dim)
                fail(path + "/A/" + std::to_string(r),
                     "expected " + std::to_string(src.dim) + " columns");
            d.map.A.push_back(std::move(row));
        }
        d.map.b = get_int_vector(dj["b"], path + "/b");
        if (d.map.b.size() != dst.dim)
            fail(path + "/b", "expected " + std::to_string(dst.dim) + " entries");
        p.dependences.push_back(std::move(d));
    }

    if (!doc.contains("tilings") || !doc["tilings"].is_array())
        fail("/tilings", "expected an array");
    std::set<std::string> tiled;
    for (std::size_t i = 0; i < doc["tilings"].size(); ++i) {
        const std::string path = "/tilings/" + std::to_string(i);
        const auto& tj = doc["tilings"][i];
        if (!tj.is_object() || !tj.contains("space") || !tj.contains("normals") ||
            !tj.contains("sizes"))
            fail(path, "expected {space, normals, sizes}");
        TilingSpec t;
        t.space = tj["space"].get<std::string>();
        if (!names.count(t.space))
            fail(path + "/space", "unknown space '" + t.space + "'");
        if (!tiled.insert(t.space).second)
            fail(path + "/space", "space '" + t.space + "' already has a tiling");
        const Space& sp = p.space(t.space);
        if (!tj["normals"].is_array() || tj["normals"].empty())
            fail(path + "/normals", "expected a non-empty array");
        for (std::size_t r = 0; r < tj["normals"].size(); ++r) {
            auto n = get_int_vector(tj["normals"][r], path + "/normals/" + std::to_string(r));
            if (n.size() != sp.dim)
                fail(path + "/normals/" + std::to_string(r),
                     "expected " + std::to_string(sp.dim) + " entries");
            if (std::all_of(n.begin(), n.end(), [](const Int& v) { return v == 0; }))
                fail(path + "/normals/" + std::to_string(r), "normal must be nonzero");
            t.normals.push_back(std::move(n));
        }
        t.sizes = get_int_vector(tj["sizes"], path + "/sizes");
        if (t.sizes.size() != t.normals.size())
            fail(path + "/sizes", "expected one size per normal");
        for (std::size_t r = 0; r < t.sizes.size(); ++r)
            if (t.sizes[r] < 1)
                fail(path + "/sizes/" + std::to_string(r), "tile size must be positive");
        if (t.normals.size() > sp.dim)
            fail(path + "/normals", "more hyperplanes than dimensions");
        linalg::RatMatrix N(t.normals.size(), sp.dim);
        for (std::size_t r = 0; r < t.normals.size(); ++r)
            for (std::size_t c = 0; c < sp.dim; ++c)
                N.at(r, c) = Rational(t.normals[r][c]);
        if (linalg::rank(N) != t.normals.size())
            fail(path + "/normals", "dependent normals: tiling hyperplanes must be linearly independent");
        p.tilings.push_back(std::move(t));
    }

    return p;
}

Program load_program_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("JSON parse error: ") + e.what());
    }
    return load_program(doc);
}

Program load_program_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_program_text(ss.str());
}

iset::ISet tile_set(const TilingSpec& tiling, const std::vector<Int>& t) {
    if (t.size() != tiling.hyperplanes())
        throw Error("tile_set: coordinate arity does not match hyperplane count");
    const std::size_t dim = tiling.normals[0].size();
    std::vector<iset::AffineConstraint> cs;
    for (std::size_t j = 0; j < tiling.hyperplanes(); ++j) {
        const Int lo = tiling.sizes[j] * t[j];
        // x.n_j - s_j t_j >= 0
        cs.push_back(iset::ge(tiling.normals[j], -lo));
        // s_j (t_j + 1) - 1 - x.n_j >= 0
        std::vector<Int> neg = tiling.normals[j];
        for (auto& v : neg)
            v = -v;
        cs.push_back(iset::ge(std::move(neg), lo + tiling.sizes[j] - 1));
    }
    return iset::make_set(dim, std::move(cs));
}

std::vector<linalg::RatVector> scaled_normals(const TilingSpec& tiling) {
    const std::size_t t = tiling.hyperplanes();
    const std::size_t d = tiling.normals[0].size();
    linalg::RatMatrix N(t, d);
    for (std::size_t r = 0; r < t; ++r)
        for (std::size_t c = 0; c < d; ++c)
            N.at(r, c) = Rational(tiling.normals[r][c]);
    linalg::RatMatrix G(t, t);
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < t; ++j) {
            Rational s = 0;
            for (std::size_t c = 0; c < d; ++c)
                s += N.at(i, c) * N.at(j, c);
            G.at(i, j) = s;
        }
    std::vector<linalg::RatVector> out;
    linalg::RatMatrix Nt = N.transposed();
    for (std::size_t j = 0; j < t; ++j) {
        linalg::RatVector rhs(t);
        rhs[j] = Rational(tiling.sizes[j]);
        linalg::RatVector c = linalg::solve(G, rhs); // independent normals: nonsingular
        out.push_back(Nt.apply(c));
    }
    return out;
}

} // namespace mars::model
