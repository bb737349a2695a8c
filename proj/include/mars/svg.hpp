// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mars/analysis.hpp"
#include "mars/model.hpp"

#include <string>

namespace mars::svg {

// Deterministic SVG of a 2-D analysis: destination grid, footprint
// points filled per MARS signature, reference-tile outline when the
// spaces share a 2-D shape, and a signature legend. Requires a 2-D
// source space and a destination of dimension 1 or 2.
std::string render(const model::Program& program, const std::string& dest,
                   const analysis::MarsPartition& partition);

} // namespace mars::svg
