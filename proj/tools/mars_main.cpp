// SPDX-License-Identifier: Apache-2.0

#include "mars/errors.hpp"
#include "mars/model.hpp"
#include "mars/oracle.hpp"
#include "mars/report.hpp"
#include "mars/svg.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw mars::ValidationError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw mars::Error("cannot write '" + path + "'");
    out << content;
}

void emit_error(const std::string& type, const std::string& message) {
    nlohmann::ordered_json e;
    e["error"]["type"] = type;
    e["error"]["message"] = message;
    std::cerr << e.dump(2) << "\n";
}

std::vector<mars::Int> parse_tile(const std::string& text) {
    std::vector<mars::Int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        out.emplace_back(item);
    return out;
}

std::size_t default_max_families() {
    if (const char* env = std::getenv("MARS_MAX_FAMILIES"))
        return std::strtoul(env, nullptr, 10);
    return 16;
}

int cmd_analyze(const std::string& path, const mars::report::Options& opts, const std::string& out_path) {
    std::string bytes = read_file(path);
    mars::model::Program program = mars::model::load_program_text(bytes);
    mars::report::AnalysisResult result = mars::report::run_analysis(program, bytes, opts);
    std::string text = mars::report::to_json(result).dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        write_file(out_path, text);
    if (!result.refusal.empty()) {
        emit_error("refusal", result.refusal);
        return 2;
    }
    return 0;
}

int cmd_verify(const std::string& path, const std::string& dest_flag, long long tile_box,
               long long data_box, const std::string& against, const std::string& out_path) {
    std::string bytes = read_file(path);
    mars::model::Program program = mars::model::load_program_text(bytes);
    const std::string dest = mars::report::select_destination(program, dest_flag);

    mars::analysis::MarsPartition partition;
    if (against.empty()) {
        mars::report::Options opts;
        opts.dest = dest;
        mars::report::AnalysisResult result = mars::report::run_analysis(program, bytes, opts);
        if (!result.refusal.empty()) {
            emit_error("refusal", result.refusal);
            return 2;
        }
        partition = *result.partition;
    } else {
        nlohmann::json stored = nlohmann::json::parse(read_file(against));
        mars::report::StoredPartition sp = mars::report::partition_from_json(stored);
        partition.destination = dest;
        partition.footprint = sp.footprint;
        partition.offsets = sp.offsets;
        partition.mars = sp.mars;
        auto deps = program.deps_into(dest);
        partition.tile.assign(program.tiling_of(deps[0]->source)->hyperplanes(), 0);
    }

    std::optional<mars::Int> data_radius;
    if (data_box >= 0)
        data_radius = mars::Int(data_box);
    mars::oracle::SignatureGrouping grouping =
        mars::oracle::oracle_mars(program, dest, mars::Int(tile_box), data_radius);
    mars::report::OracleAgreement agreement =
        mars::report::compare_with_oracle(program, dest, partition, grouping);

    for (const auto& line : agreement.table)
        std::cout << line << "\n";
    std::size_t total = grouping.groups.size();
    std::cout << (agreement.agree ? "agree: " : "DISAGREE: ") << total << "/" << total
              << " oracle groups, " << partition.mars.size() << " MARS\n";

    if (!out_path.empty()) {
        mars::report::Options opts;
        opts.dest = dest;
        mars::report::AnalysisResult result = mars::report::run_analysis(program, bytes, opts);
        result.oracle = agreement;
        write_file(out_path, mars::report::to_json(result).dump(2) + "\n");
    }
    return agreement.agree ? 0 : 3;
}

int cmd_render(const std::string& path, const std::string& dest_flag, const std::string& svg_path,
               const std::string& tile_text) {
    std::string bytes = read_file(path);
    mars::model::Program program = mars::model::load_program_text(bytes);
    const std::string dest = mars::report::select_destination(program, dest_flag);

    auto dep_ptrs = program.deps_into(dest);
    mars::analysis::Deps deps;
    for (const auto* d : dep_ptrs)
        deps.push_back(*d);
    const mars::model::TilingSpec* tiling = program.tiling_of(deps[0].source);
    if (!tiling)
        throw mars::ValidationError("source space '" + deps[0].source + "' has no tiling");

    mars::analysis::BuildOptions bo;
    bo.max_families = default_max_families();
    if (!tile_text.empty())
        bo.tile = parse_tile(tile_text);
    mars::analysis::MarsPartition partition = mars::analysis::build_mars(deps, *tiling, bo);
    write_file(svg_path, mars::svg::render(program, dest, partition));
    std::cout << "wrote " << svg_path << " (" << partition.mars.size() << " MARS)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Affine-MARS: partition tile footprints by consumer-tile signature"};
    app.require_subcommand(1);

    std::string file, dest, out_path, against, svg_path, tile_text;
    bool exclude_self = false, run_fd = false;
    std::size_t max_families = default_max_families();
    long long fd_box = 3, tile_box = 3, data_box = -1;

    CLI::App* analyze = app.add_subcommand("analyze", "run the analysis and emit a JSON report");
    analyze->add_option("file", file, "program description (JSON)")->required();
    analyze->add_option("--dest", dest, "destination space (default: the unique one)");
    analyze->add_flag("--exclude-self", exclude_self, "drop MARS fully inside the reference tile");
    analyze->add_option("--max-families", max_families, "offset family blow-up guard");
    analyze->add_flag("--fd", run_fd, "include the consumer-family diagnostic");
    analyze->add_option("--fd-box", fd_box, "tile box radius for the diagnostic");
    analyze->add_option("--out", out_path, "write the report here instead of stdout");

    CLI::App* verify = app.add_subcommand("verify", "compare the analysis against the brute-force oracle");
    verify->add_option("file", file, "program description (JSON)")->required();
    verify->add_option("--dest", dest, "destination space");
    verify->add_option("--tile-box", tile_box, "consumer tile box radius");
    verify->add_option("--data-box", data_box, "destination box radius (default: derived)");
    verify->add_option("--against", against, "check a previously written report instead of recomputing");
    verify->add_option("--out", out_path, "also write a report with the agreement verdict");

    CLI::App* render = app.add_subcommand("render", "draw the partition as a deterministic SVG");
    render->add_option("file", file, "program description (JSON)")->required();
    render->add_option("--svg", svg_path, "output SVG path")->required();
    render->add_option("--dest", dest, "destination space");
    render->add_option("--tile", tile_text, "reference tile coordinates, e.g. 0,0");

    CLI11_PARSE(app, argc, argv);

    try {
        if (analyze->parsed()) {
            mars::report::Options opts;
            opts.dest = dest;
            opts.exclude_self = exclude_self;
            opts.max_families = max_families;
            opts.run_fd = run_fd;
            opts.fd_radius = mars::Int(fd_box);
            return cmd_analyze(file, opts, out_path);
        }
        if (verify->parsed())
            return cmd_verify(file, dest, tile_box, data_box, against, out_path);
        if (render->parsed())
            return cmd_render(file, dest, svg_path, tile_text);
    } catch (const mars::ValidationError& e) {
        emit_error("validation", e.what());
        return 1;
    } catch (const mars::RefusalError& e) {
        emit_error("refusal", e.what());
        return 2;
    } catch (const mars::UndecidedError& e) {
        emit_error("undecided", e.what());
        return 2;
    } catch (const std::exception& e) {
        emit_error("internal", e.what());
        return 1;
    }
    return 0;
}
