// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mars/analysis.hpp"
#include "mars/model.hpp"
#include "mars/oracle.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <string>
#include <vector>

namespace mars::report {

struct OracleAgreement {
    bool agree = false;
    std::vector<std::string> table; // one line per matched group / discrepancy
};

struct Options {
    std::string dest;       // empty = the unique destination space
    bool exclude_self = false;
    std::size_t max_families = 16;
    bool run_fd = false;
    Int fd_radius = 3;
};

struct AnalysisResult {
    std::string digest;
    std::string destination;
    analysis::DepClass classification;
    std::optional<analysis::InvarianceVerdict> invariance;
    std::optional<analysis::MarsPartition> partition;
    std::optional<analysis::FDPartitionReport> fd;
    std::optional<analysis::ConjectureReport> conjecture;
    std::optional<OracleAgreement> oracle;
    std::string refusal; // non-empty when the pipeline declined
};

// Full pipeline on one destination space; refusals are captured in the
// result instead of escaping.
AnalysisResult run_analysis(const model::Program& program, const std::string& input_bytes,
                            const Options& opts);

// Pick the destination space: opts override or the unique dependence
// target.
std::string select_destination(const model::Program& program, const std::string& requested);

// Match the symbolic partition against the oracle grouping: oracle
// signatures map through W onto family subsets, then point sets must
// agree exactly.
OracleAgreement compare_with_oracle(const model::Program& program, const std::string& dest,
                                    const analysis::MarsPartition& partition,
                                    const oracle::SignatureGrouping& grouping);

nlohmann::ordered_json to_json(const AnalysisResult& r);

// Reconstruct the partition pieces a report carries (verify --against,
// round-trip tests).
struct StoredPartition {
    iset::ISet footprint;
    std::vector<analysis::OffsetFamily> offsets;
    std::vector<analysis::MarsSet> mars;
};
StoredPartition partition_from_json(const nlohmann::json& report);

std::string sha256_hex(const std::string& bytes);

} // namespace mars::report
