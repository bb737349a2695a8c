// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <vector>

namespace mars {

// Exact arithmetic carriers. No floating point anywhere in the analysis.
// cpp_rational keeps values in lowest terms with a positive denominator.
using Int = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

using boost::multiprecision::abs;
using boost::multiprecision::denominator;
using boost::multiprecision::gcd;
using boost::multiprecision::lcm;
using boost::multiprecision::numerator;

// floor(a/b) for any signs, b != 0.
inline Int floor_div(const Int& a, const Int& b) {
    Int q = a / b;
    if ((a % b) != 0 && ((a < 0) != (b < 0)))
        --q;
    return q;
}

// ceil(a/b) for any signs, b != 0.
inline Int ceil_div(const Int& a, const Int& b) {
    Int q = a / b;
    if ((a % b) != 0 && ((a < 0) == (b < 0)))
        ++q;
    return q;
}

// a mod m reduced into [0, m), m > 0.
inline Int mod_floor(const Int& a, const Int& m) {
    Int r = a % m;
    if (r < 0)
        r += m;
    return r;
}

inline bool is_integral(const Rational& q) { return denominator(q) == 1; }

inline Int rat_floor(const Rational& q) { return floor_div(numerator(q), denominator(q)); }
inline Int rat_ceil(const Rational& q) { return ceil_div(numerator(q), denominator(q)); }

inline std::string to_string(const Rational& q) {
    if (is_integral(q))
        return numerator(q).str();
    return numerator(q).str() + "/" + denominator(q).str();
}

inline std::string to_string(const std::vector<Int>& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            s += ", ";
        s += v[i].str();
    }
    return s + ")";
}

} // namespace mars
