// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mars/iset.hpp"
#include "mars/linalg.hpp"
#include "mars/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mars::analysis {

using Deps = std::vector<model::AffineFn>;

// Strongest applicable verdict for a dependence family.
enum class Verdict { Uniform, UniformlyIntersecting, SharedNullSpace, MultipleNullSpaces };

std::string to_string(Verdict v);

struct DepClass {
    Verdict verdict = Verdict::MultipleNullSpaces;
    // one kernel basis per distinct linear part, in order of appearance
    std::vector<linalg::SubspaceBasis> kernels;
};

// One equivalence class of consumer tiles: all tiles whose translation
// from the reference tile projects to the same vector w on the
// supplementary of the kernel, hence share one footprint.
struct OffsetFamily {
    linalg::RatVector w;
    std::vector<Int> example_delta;
    linalg::RatVector image_shift; // destination-space translation A.p

    bool is_zero() const { return w.is_zero(); }
};

struct OffsetSearch {
    std::vector<OffsetFamily> families;
    // basis of the tile-offset lattice {delta : W(delta) = 0}
    std::vector<std::vector<Int>> kernel_deltas;
};

struct InvarianceWitness {
    std::vector<Int> tile;
    std::vector<Int> delta;
    std::string detail;
};

struct InvarianceVerdict {
    bool pass = false;
    std::optional<InvarianceWitness> witness;
};

struct MarsSet {
    std::vector<std::size_t> signature; // indices into the offset family list
    iset::ISet set;
};

struct MarsPartition {
    std::string destination;
    std::vector<Int> tile; // tile the sets are anchored at
    iset::ISet footprint;  // combined footprint of that tile
    std::vector<OffsetFamily> offsets;
    std::vector<MarsSet> mars;
    InvarianceVerdict invariance;
};

struct FDFamily {
    std::vector<std::size_t> deps;               // contributing dependence indices
    std::vector<std::vector<Int>> tiles;         // consumer tiles found in the box
    // distinct W_i values per contributing dependence (same order as deps)
    std::vector<std::vector<linalg::RatVector>> w_values;
};

struct FDPartitionReport {
    Int box_radius = 0;
    std::vector<FDFamily> families;
};

enum class TripleStatus { Pass, Fail, OrthogonalSkipped };

struct ConjectureTriple {
    std::size_t dep = 0, source_hp = 0, dest_hp = 0;
    Rational dot;                 // (A_i nhat_j) . d_k
    TripleStatus status = TripleStatus::Fail;
    std::optional<Int> multiplier; // the integer m when status is Pass
};

struct ConjectureReport {
    std::vector<ConjectureTriple> triples;
    bool satisfied = true; // no triple failed (skipped triples do not count)
};

struct BuildOptions {
    std::size_t max_families = 16;
    std::vector<Int> tile; // empty = origin
    bool exclude_self = false;
};

// Classify the family: Uniform / UniformlyIntersecting / SharedNullSpace
// / MultipleNullSpaces; kernels per distinct linear part.
DepClass classify(const Deps& deps);

// Union of the dependences' images of T(t); refuses when unbounded.
iset::ISet combined_footprint(const Deps& deps, const model::TilingSpec& tiling,
                              const std::vector<Int>& t);

// Complete enumeration of offset families for the reference tile. The
// consumer region is covered exactly: coset representatives of the
// delta-kernel lattice are enumerated over the polytope of shifts that
// can still overlap the reference footprint's bounding box, then kept on
// an exact footprint-intersection test. `margin` widens the enumeration
// box (used by tests to show wider searches add nothing).
OffsetSearch offset_search(const Deps& deps, const model::TilingSpec& tiling,
                           std::size_t margin = 0);
std::vector<OffsetFamily> offset_families(const Deps& deps, const model::TilingSpec& tiling);

// Check that footprints behave as translates across sample tiles: for
// every candidate delta, footprint(t+delta) must equal footprint(t)
// translated by the (single, integral) dependence shift. Failure carries
// a concrete witness.
InvarianceVerdict verify_invariance(const Deps& deps, const model::TilingSpec& tiling,
                                    const std::vector<std::vector<Int>>& samples);

std::vector<std::vector<Int>> default_samples(std::size_t t_dims);

// Build the MARS partition at the reference tile by consumer-set
// refinement of the footprint (equivalent to evaluating M_C for every
// consumer subset C and keeping the non-empty ones).
MarsPartition build_mars(const Deps& deps, const model::TilingSpec& tiling,
                         const BuildOptions& opts = {});

// Same, with a precomputed offset search and invariance verdict (callers
// building at several tiles reuse both).
MarsPartition build_mars(const Deps& deps, const model::TilingSpec& tiling,
                         const BuildOptions& opts, const OffsetSearch& search,
                         const InvarianceVerdict& invariance);

// Group consumer tiles in a box by the exact subset of dependences that
// reaches them. Diagnostic for the multiple-null-space regime.
FDPartitionReport fd_partition(const Deps& deps, const model::TilingSpec& tiling,
                               const Int& box_radius);

// Per-(dependence, source hyperplane, destination hyperplane) check of
// the tiled-destination compatibility condition: an integer m with
// m ((A_i nhat_j) . d_k) = z_k; zero dot products are reported as
// orthogonal and skipped.
ConjectureReport tiled_destination_condition(const Deps& deps, const model::TilingSpec& source_tiling,
                                             const model::TilingSpec& dest_tiling);

} // namespace mars::analysis
