// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mars/errors.hpp"
#include "mars/linalg.hpp"

#include <random>

using namespace mars;
using namespace mars::linalg;

namespace {

RatMatrix make(std::size_t rows, std::size_t cols, std::vector<long long> entries) {
    RatMatrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            m.at(r, c) = Rational(entries[r * cols + c]);
    return m;
}

RatVector vec(std::vector<Rational> entries) { return RatVector(std::move(entries)); }

RatMatrix random_matrix(std::mt19937& rng, std::size_t rows, std::size_t cols) {
    std::uniform_int_distribution<int> num(-4, 4);
    std::uniform_int_distribution<int> den(1, 3);
    RatMatrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            m.at(r, c) = Rational(num(rng), den(rng));
    return m;
}

} // namespace

TEST_CASE("kernel of the coordinate projection is the dropped axis") {
    auto K = kernel_basis(make(1, 2, {1, 0}));
    REQUIRE(K.dim() == 1);
    CHECK(K.vectors[0] == vec({0, 1}));
}

TEST_CASE("injective maps have an empty kernel") {
    auto K = kernel_basis(RatMatrix::identity(2));
    CHECK(K.dim() == 0);
    CHECK(K.ambient_dim == 2);
}

TEST_CASE("row-wise kernels of the diagonal pair") {
    // hand oracle: solve the two 1x2 homogeneous systems
    auto K1 = kernel_basis(make(1, 2, {1, -1}));
    REQUIRE(K1.dim() == 1);
    CHECK(K1.vectors[0] == vec({1, 1}));
    auto K2 = kernel_basis(make(1, 2, {1, 1}));
    REQUIRE(K2.dim() == 1);
    CHECK(K2.vectors[0] == vec({1, -1}));
    // stacked, the kernel is trivial
    CHECK(kernel_basis(make(2, 2, {1, -1, 1, 1})).dim() == 0);
}

TEST_CASE("supplementary of the j axis is the i axis") {
    SubspaceBasis K{2, {vec({0, 1})}};
    auto S = supplementary_basis(K);
    REQUIRE(S.dim() == 1);
    CHECK(S.vectors[0] == vec({1, 0}));
}

TEST_CASE("supplementary of the zero subspace is the full space") {
    SubspaceBasis K{2, {}};
    auto S = supplementary_basis(K);
    REQUIRE(S.dim() == 2);
    CHECK(S.vectors[0] == vec({1, 0}));
    CHECK(S.vectors[1] == vec({0, 1}));
}

TEST_CASE("supplementary of the diagonal") {
    SubspaceBasis K{2, {vec({1, 1})}};
    auto S = supplementary_basis(K);
    REQUIRE(S.dim() == 1);
    CHECK(dot(S.vectors[0], K.vectors[0]) == 0);
    RatMatrix both(2, 2);
    for (std::size_t c = 0; c < 2; ++c) {
        both.at(0, c) = K.vectors[0][c];
        both.at(1, c) = S.vectors[0][c];
    }
    CHECK(rank(both) == 2);
}

TEST_CASE("projection onto one axis") {
    SubspaceBasis S{2, {vec({1, 0})}};
    CHECK(project_onto(S, vec({2, 2})) == vec({2, 0}));
}

TEST_CASE("full-space projection is the identity") {
    SubspaceBasis S{2, {vec({1, 0}), vec({0, 1})}};
    CHECK(project_onto(S, vec({3, 7})) == vec({3, 7}));
}

TEST_CASE("projection onto the diagonal") {
    SubspaceBasis S{2, {vec({1, 1})}};
    CHECK(project_onto(S, vec({2, 0})) == vec({1, 1}));
}

TEST_CASE("rank on the small fixtures") {
    CHECK(rank(make(1, 2, {1, 0})) == 1);
    CHECK(rank(RatMatrix::identity(2)) == 2);
    CHECK(rank(make(2, 2, {1, 1, 2, 2})) == 1); // proportional rows
    CHECK(rank(make(2, 3, {0, 0, 0, 0, 0, 0})) == 0);
}

TEST_CASE("kernel and rank are complementary on random matrices") {
    std::mt19937 rng(7);
    for (int iter = 0; iter < 200; ++iter) {
        std::uniform_int_distribution<std::size_t> dims(1, 6);
        const std::size_t rows = dims(rng), cols = dims(rng);
        RatMatrix A = random_matrix(rng, rows, cols);
        auto K = kernel_basis(A);
        CHECK(K.dim() + rank(A) == cols);
        for (const auto& v : K.vectors) {
            RatVector Av = A.apply(v);
            CHECK(Av.is_zero());
        }
        auto S = supplementary_basis(K);
        CHECK(S.dim() + K.dim() == cols);
        // direct sum: the union of the bases has full rank
        RatMatrix both(cols, cols);
        std::size_t r = 0;
        for (const auto& v : K.vectors) {
            for (std::size_t c = 0; c < cols; ++c)
                both.at(r, c) = v[c];
            ++r;
        }
        for (const auto& v : S.vectors) {
            for (std::size_t c = 0; c < cols; ++c)
                both.at(r, c) = v[c];
            ++r;
        }
        CHECK(rank(both) == cols);
    }
}

TEST_CASE("projection is idempotent and residuals are orthogonal") {
    std::mt19937 rng(11);
    for (int iter = 0; iter < 100; ++iter) {
        std::uniform_int_distribution<std::size_t> dims(1, 5);
        const std::size_t d = dims(rng);
        RatMatrix A = random_matrix(rng, dims(rng), d);
        auto S = kernel_basis(A); // any subspace works here
        RatVector v(d);
        std::uniform_int_distribution<int> num(-5, 5);
        for (std::size_t i = 0; i < d; ++i)
            v[i] = Rational(num(rng));
        RatVector p = project_onto(S, v);
        CHECK(project_onto(S, p) == p);
        RatVector r = v - p;
        for (const auto& s : S.vectors)
            CHECK(dot(r, s) == 0);
    }
}

TEST_CASE("solve recovers exact solutions") {
    RatMatrix G = make(2, 2, {2, 1, 1, 2});
    RatVector x = solve(G, vec({1, 2}));
    CHECK(x == vec({0, 1}));
    CHECK_THROWS_AS(solve(make(2, 2, {1, 1, 2, 2}), vec({1, 1})), mars::Error);
}

TEST_CASE("same_span recognizes rescaled bases") {
    SubspaceBasis A{2, {vec({1, 1})}};
    SubspaceBasis B{2, {vec({2, 2})}};
    SubspaceBasis C{2, {vec({1, -1})}};
    CHECK(same_span(A, B));
    CHECK_FALSE(same_span(A, C));
}
