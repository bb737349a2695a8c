// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mars/iset.hpp"
#include "mars/linalg.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <string>
#include <vector>

namespace mars::model {

enum class SpaceKind { Iteration, Data };

struct Space {
    std::string name;
    std::size_t dim = 0;
    SpaceKind kind = SpaceKind::Iteration;
    std::optional<iset::Box> bounds; // optional domain box, for oracle runs
};

// Dependence B(x) = Ax + b from `source` into `target`.
struct AffineFn {
    std::string source;
    std::string target;
    iset::AffineMap map;
};

// Linearly independent hyperplane normals n_j with tile sizes s_j.
// Tile coordinates t give T(t) = {x : s_j t_j <= x.n_j < s_j (t_j + 1)}.
struct TilingSpec {
    std::string space;
    std::vector<std::vector<Int>> normals;
    std::vector<Int> sizes;

    std::size_t hyperplanes() const { return normals.size(); }
};

struct Program {
    std::vector<Space> spaces;
    std::vector<AffineFn> dependences;
    std::vector<TilingSpec> tilings;

    const Space& space(const std::string& name) const;
    const TilingSpec* tiling_of(const std::string& space) const;
    std::vector<const AffineFn*> deps_into(const std::string& target) const;
    std::vector<std::string> destination_spaces() const;
};

// Parse and validate a program document; throws ValidationError with a
// path-qualified message on any violation.
Program load_program(const nlohmann::json& doc);
Program load_program_text(const std::string& text);
Program load_program_file(const std::string& path);

// T(t) as an exact integer set.
iset::ISet tile_set(const TilingSpec& tiling, const std::vector<Int>& t);

// Scaled normal vectors: adding the j-th one to any point advances the
// j-th hyperplane phase by exactly one period and fixes all the others,
// i.e. (x + nhat_j).n_k = x.n_k + s_j [j = k]. Solved through the Gram
// system, so non-orthogonal normal families work too.
std::vector<linalg::RatVector> scaled_normals(const TilingSpec& tiling);

} // namespace mars::model
