// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mars/model.hpp"
#include "mars/rational.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mars::oracle {

// Brute-force ground truth. Tiles are re-derived here from dot-product
// membership tests per point, independently of the symbolic set algebra,
// so a bug there cannot hide on both sides of a comparison.

using Point = std::vector<Int>;
using TileCoord = std::vector<Int>;

struct SignatureGrouping {
    // signature (sorted consumer-tile offsets) -> sorted points, ordered
    // by signature
    std::vector<std::pair<std::vector<TileCoord>, std::vector<Point>>> groups;
};

// Group every point of the reference tile's footprint by the exact set
// of tiles (within [-tile_radius, tile_radius]^t) that consume it.
// data_radius, when given, bounds the destination box; images escaping
// it are an error.
SignatureGrouping oracle_mars(const model::Program& program, const std::string& dest_space,
                              const Int& tile_radius, const std::optional<Int>& data_radius);

// {B(x) : x in T(t)}, clipped to the [-data_radius, data_radius]^m box,
// sorted.
std::vector<Point> oracle_footprint(const model::AffineFn& dep, const model::TilingSpec& tiling,
                                    const TileCoord& t, const Int& data_radius);

} // namespace mars::oracle
