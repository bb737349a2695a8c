// SPDX-License-Identifier: Apache-2.0

#include "mars/report.hpp"

#include "mars/errors.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <sstream>

namespace mars::report {

namespace {

using nlohmann::ordered_json;

ordered_json rat_vector_json(const linalg::RatVector& v) {
    ordered_json out = ordered_json::array();
    for (const auto& q : v.e)
        out.push_back(mars::to_string(q));
    return out;
}

ordered_json int_vector_json(const std::vector<Int>& v) {
    ordered_json out = ordered_json::array();
    for (const auto& x : v)
        out.push_back(x.convert_to<long long>());
    return out;
}

std::vector<Int> int_vector_from_json(const nlohmann::json& j) {
    std::vector<Int> out;
    for (const auto& e : j)
        out.push_back(Int(e.get<long long>()));
    return out;
}

Rational rational_from_string(const std::string& s) {
    auto slash = s.find('/');
    if (slash == std::string::npos)
        return Rational(Int(s));
    return Rational(Int(s.substr(0, slash)), Int(s.substr(slash + 1)));
}

linalg::RatVector rat_vector_from_json(const nlohmann::json& j) {
    linalg::RatVector v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        v[i] = rational_from_string(j[i].get<std::string>());
    return v;
}

std::string signature_string(const analysis::MarsPartition& p, const std::vector<std::size_t>& sig) {
    std::string s = "{";
    for (std::size_t i = 0; i < sig.size(); ++i) {
        if (i)
            s += ", ";
        s += mars::to_string(p.offsets[sig[i]].example_delta);
    }
    return s + "}";
}

} // namespace

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
        throw Error("sha256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

std::string select_destination(const model::Program& program, const std::string& requested) {
    if (!requested.empty()) {
        program.space(requested); // throws on unknown name
        if (program.deps_into(requested).empty())
            throw ValidationError("no dependences target space '" + requested + "'");
        return requested;
    }
    auto dests = program.destination_spaces();
    if (dests.empty())
        throw ValidationError("the program has no dependences");
    if (dests.size() > 1) {
        std::string msg = "multiple destination spaces (";
        for (std::size_t i = 0; i < dests.size(); ++i)
            msg += (i ? ", " : "") + dests[i];
        throw ValidationError(msg + "); pick one with --dest");
    }
    return dests[0];
}

AnalysisResult run_analysis(const model::Program& program, const std::string& input_bytes,
                            const Options& opts) {
    AnalysisResult r;
    r.digest = "sha256:" + sha256_hex(input_bytes);
    r.destination = select_destination(program, opts.dest);

    analysis::Deps deps;
    for (const auto* d : program.deps_into(r.destination))
        deps.push_back(*d);
    const model::TilingSpec* tiling = program.tiling_of(deps[0].source);
    if (!tiling)
        throw ValidationError("source space '" + deps[0].source + "' has no tiling");

    r.classification = analysis::classify(deps);

    if (const model::TilingSpec* dest_tiling = program.tiling_of(r.destination))
        r.conjecture = analysis::tiled_destination_condition(deps, *tiling, *dest_tiling);

    try {
        r.invariance = analysis::verify_invariance(deps, *tiling,
                                                   analysis::default_samples(tiling->hyperplanes()));
    } catch (const RefusalError& e) {
        r.refusal = e.what(); // e.g. unbounded footprint
        return r;
    }

    if (r.classification.verdict == analysis::Verdict::MultipleNullSpaces) {
        if (opts.run_fd)
            r.fd = analysis::fd_partition(deps, *tiling, opts.fd_radius);
        else
            r.refusal = "dependences have multiple distinct null spaces; footprints are not "
                        "translation-invariant, so no MARS partition is produced (rerun with --fd "
                        "for the consumer-family diagnostic)";
        return r;
    }

    try {
        analysis::BuildOptions bo;
        bo.max_families = opts.max_families;
        bo.exclude_self = opts.exclude_self;
        r.partition = analysis::build_mars(deps, *tiling, bo);
    } catch (const RefusalError& e) {
        r.refusal = e.what();
    }
    if (opts.run_fd)
        r.fd = analysis::fd_partition(deps, *tiling, opts.fd_radius);
    return r;
}

OracleAgreement compare_with_oracle(const model::Program& program, const std::string& dest,
                                    const analysis::MarsPartition& partition,
                                    const oracle::SignatureGrouping& grouping) {
    OracleAgreement out;
    out.agree = true;

    analysis::Deps deps;
    for (const auto* d : program.deps_into(dest))
        deps.push_back(*d);
    const model::TilingSpec* tiling = program.tiling_of(deps[0].source);
    analysis::DepClass dc = analysis::classify(deps);
    linalg::SubspaceBasis suppl = linalg::supplementary_basis(dc.kernels[0]);
    std::vector<linalg::RatVector> nhat = model::scaled_normals(*tiling);

    auto box = iset::bounding_box(partition.footprint);
    if (!box)
        throw Error("compare_with_oracle: unbounded footprint");

    // the oracle groups partition the footprint they saw; their union
    // must be exactly the symbolic footprint
    std::size_t group_points = 0;
    for (const auto& [sig, pts] : grouping.groups)
        group_points += pts.size();
    std::size_t footprint_points = iset::enumerate(partition.footprint, *box).size();
    if (group_points != footprint_points) {
        out.agree = false;
        out.table.push_back("footprint size mismatch: symbolic " + std::to_string(footprint_points) +
                            " points, oracle " + std::to_string(group_points));
    }

    auto family_of = [&](const std::vector<Int>& delta) -> std::optional<std::size_t> {
        linalg::RatVector sigma(nhat[0].dim());
        for (std::size_t j = 0; j < nhat.size(); ++j)
            sigma = sigma + Rational(delta[j]) * nhat[j];
        linalg::RatVector w = linalg::project_onto(suppl, sigma);
        for (std::size_t i = 0; i < partition.offsets.size(); ++i)
            if (partition.offsets[i].w == w)
                return i;
        return std::nullopt;
    };

    std::vector<bool> matched(partition.mars.size(), false);
    for (const auto& [tile_sig, points] : grouping.groups) {
        std::vector<std::size_t> fam_sig;
        bool unknown = false;
        for (const auto& delta : tile_sig) {
            auto f = family_of(delta);
            if (!f) {
                unknown = true;
                break;
            }
            if (std::find(fam_sig.begin(), fam_sig.end(), *f) == fam_sig.end())
                fam_sig.push_back(*f);
        }
        std::string label = "oracle group of " + std::to_string(points.size()) + " points, tiles {";
        for (std::size_t i = 0; i < tile_sig.size(); ++i)
            label += (i ? ", " : "") + mars::to_string(tile_sig[i]);
        label += "}";
        if (unknown) {
            out.agree = false;
            out.table.push_back(label + ": consumer tile outside the computed offset families");
            continue;
        }
        std::sort(fam_sig.begin(), fam_sig.end());
        auto it = std::find_if(partition.mars.begin(), partition.mars.end(),
                               [&](const analysis::MarsSet& m) { return m.signature == fam_sig; });
        if (it == partition.mars.end()) {
            out.agree = false;
            out.table.push_back(label + ": no MARS with the matching signature " +
                                signature_string(partition, fam_sig));
            continue;
        }
        matched[it - partition.mars.begin()] = true;
        auto own_box = iset::bounding_box(it->set);
        auto pts = own_box ? iset::enumerate(it->set, *own_box) : std::vector<iset::Point>{};
        if (pts == points) {
            out.table.push_back(label + ": matches MARS " + signature_string(partition, fam_sig));
        } else {
            out.agree = false;
            out.table.push_back(label + ": point set differs from MARS " +
                                signature_string(partition, fam_sig) + " (" +
                                std::to_string(pts.size()) + " points)");
        }
    }
    for (std::size_t i = 0; i < partition.mars.size(); ++i) {
        if (!matched[i]) {
            out.agree = false;
            out.table.push_back("MARS " + signature_string(partition, partition.mars[i].signature) +
                                ": no oracle group with this signature");
        }
    }
    return out;
}

ordered_json to_json(const AnalysisResult& r) {
    ordered_json j;
    j["schema"] = 1;
    j["programDigest"] = r.digest;
    j["destination"] = r.destination;

    ordered_json cls;
    cls["verdict"] = analysis::to_string(r.classification.verdict);
    cls["kernels"] = ordered_json::array();
    for (const auto& k : r.classification.kernels) {
        ordered_json basis = ordered_json::array();
        for (const auto& v : k.vectors)
            basis.push_back(rat_vector_json(v));
        cls["kernels"].push_back(std::move(basis));
    }
    j["classification"] = std::move(cls);

    if (r.invariance) {
        ordered_json inv;
        inv["verdict"] = r.invariance->pass ? "pass" : "fail";
        if (r.invariance->witness) {
            ordered_json w;
            w["tile"] = int_vector_json(r.invariance->witness->tile);
            w["delta"] = int_vector_json(r.invariance->witness->delta);
            w["detail"] = r.invariance->witness->detail;
            inv["witness"] = std::move(w);
        }
        j["invariance"] = std::move(inv);
    }

    if (r.partition) {
        const auto& p = *r.partition;
        j["tile"] = int_vector_json(p.tile);
        ordered_json offs = ordered_json::array();
        for (const auto& f : p.offsets) {
            ordered_json o;
            o["w"] = rat_vector_json(f.w);
            o["delta"] = int_vector_json(f.example_delta);
            o["imageShift"] = rat_vector_json(f.image_shift);
            offs.push_back(std::move(o));
        }
        j["offsets"] = std::move(offs);
        j["footprint"] = iset::to_json(p.footprint);
        auto box = iset::bounding_box(p.footprint);
        ordered_json mars = ordered_json::array();
        for (const auto& m : p.mars) {
            ordered_json mj;
            mj["signature"] = ordered_json::array();
            for (std::size_t s : m.signature)
                mj["signature"].push_back(s);
            mj["set"] = iset::to_json(m.set);
            mj["pointCount"] = box ? iset::enumerate(m.set, *box).size() : 0;
            mars.push_back(std::move(mj));
        }
        j["mars"] = std::move(mars);
    }

    if (r.fd) {
        ordered_json fd;
        fd["boxRadius"] = r.fd->box_radius.convert_to<long long>();
        fd["families"] = ordered_json::array();
        for (const auto& fam : r.fd->families) {
            ordered_json fj;
            fj["deps"] = ordered_json::array();
            for (std::size_t d : fam.deps)
                fj["deps"].push_back(d);
            fj["tiles"] = ordered_json::array();
            for (const auto& t : fam.tiles)
                fj["tiles"].push_back(int_vector_json(t));
            fj["wValues"] = ordered_json::array();
            for (const auto& ws : fam.w_values) {
                ordered_json wl = ordered_json::array();
                for (const auto& w : ws)
                    wl.push_back(rat_vector_json(w));
                fj["wValues"].push_back(std::move(wl));
            }
            fd["families"].push_back(std::move(fj));
        }
        j["fdReport"] = std::move(fd);
    }

    if (r.conjecture) {
        ordered_json cj;
        cj["satisfied"] = r.conjecture->satisfied;
        cj["triples"] = ordered_json::array();
        for (const auto& t : r.conjecture->triples) {
            ordered_json tj;
            tj["dep"] = t.dep;
            tj["sourceHyperplane"] = t.source_hp;
            tj["destHyperplane"] = t.dest_hp;
            tj["dot"] = mars::to_string(t.dot);
            switch (t.status) {
            case analysis::TripleStatus::Pass:
                tj["status"] = "pass";
                tj["m"] = t.multiplier->convert_to<long long>();
                break;
            case analysis::TripleStatus::Fail:
                tj["status"] = "fail";
                break;
            case analysis::TripleStatus::OrthogonalSkipped:
                tj["status"] = "orthogonal-skipped";
                break;
            }
            cj["triples"].push_back(std::move(tj));
        }
        j["conjectureCheck"] = std::move(cj);
    }

    if (r.oracle) {
        ordered_json oj;
        oj["agree"] = r.oracle->agree;
        oj["table"] = r.oracle->table;
        j["oracle"] = std::move(oj);
    }

    if (!r.refusal.empty())
        j["refusal"] = r.refusal;
    return j;
}

StoredPartition partition_from_json(const nlohmann::json& report) {
    if (!report.contains("footprint") || !report.contains("mars") || !report.contains("offsets"))
        throw ValidationError("report does not carry a MARS partition");
    StoredPartition out;
    out.footprint = iset::iset_from_json(report.at("footprint"));
    for (const auto& o : report.at("offsets")) {
        analysis::OffsetFamily f;
        f.w = rat_vector_from_json(o.at("w"));
        f.example_delta = int_vector_from_json(o.at("delta"));
        f.image_shift = rat_vector_from_json(o.at("imageShift"));
        out.offsets.push_back(std::move(f));
    }
    for (const auto& m : report.at("mars")) {
        analysis::MarsSet ms;
        for (const auto& s : m.at("signature"))
            ms.signature.push_back(s.get<std::size_t>());
        ms.set = iset::iset_from_json(m.at("set"));
        out.mars.push_back(std::move(ms));
    }
    return out;
}

} // namespace mars::report
