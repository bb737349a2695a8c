// SPDX-License-Identifier: Apache-2.0

#include "mars/svg.hpp"

#include "mars/errors.hpp"
#include "mars/iset.hpp"

#include <sstream>

namespace mars::svg {

namespace {

constexpr int kScale = 24;
constexpr int kMargin = 30;

const char* kPalette[] = {
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1",
    "#ff9da7", "#9c755f", "#bab0ac", "#1b9e77", "#d95f02", "#7570b3", "#e7298a",
    "#66a61e", "#e6ab02", "#a6761d", "#386cb0", "#f0027f", "#bf5b17",
};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

// Exact rational pixels with three decimals, deterministic.
std::string px(const Rational& q) {
    Int scaled = rat_floor(q * 1000 + Rational(1, 2));
    bool neg = scaled < 0;
    Int a = neg ? -scaled : scaled;
    Int whole = a / 1000, frac = a % 1000;
    std::string s = (neg ? "-" : "") + whole.str();
    if (frac != 0) {
        std::string f = frac.str();
        while (f.size() < 3)
            f = "0" + f;
        while (!f.empty() && f.back() == '0')
            f.pop_back();
        s += "." + f;
    }
    return s;
}

std::string signature_label(const analysis::MarsPartition& p, const std::vector<std::size_t>& sig) {
    std::string s = "{";
    for (std::size_t i = 0; i < sig.size(); ++i) {
        if (i)
            s += ", ";
        s += mars::to_string(p.offsets[sig[i]].example_delta);
    }
    return s + "}";
}

} // namespace

std::string render(const model::Program& program, const std::string& dest,
                   const analysis::MarsPartition& partition) {
    auto deps = program.deps_into(dest);
    if (deps.empty())
        throw ValidationError("render: no dependences into '" + dest + "'");
    const model::Space& src = program.space(deps[0]->source);
    const model::Space& dst = program.space(dest);
    if (src.dim != 2 || dst.dim > 2)
        throw ValidationError("rendering unsupported: needs a 2-D source space and a destination "
                              "of dimension 1 or 2");

    auto boxOpt = iset::bounding_box(partition.footprint);
    if (!boxOpt)
        throw Error("render: unbounded footprint");
    iset::Box box = *boxOpt;
    const bool two_d = dst.dim == 2;
    const Int xlo = box.lo[0], xhi = box.hi[0];
    const Int ylo = two_d ? box.lo[1] : Int(0), yhi = two_d ? box.hi[1] : Int(0);

    auto X = [&](const Rational& x) { return Rational(kMargin) + (x - Rational(xlo)) * kScale; };
    auto Y = [&](const Rational& y) { return Rational(kMargin) + (Rational(yhi) + 1 - y) * kScale; };

    const long long width = kMargin * 2 + ((xhi - xlo).convert_to<long long>() + 2) * kScale;
    const long long grid_h = ((yhi - ylo).convert_to<long long>() + 2) * kScale;
    const long long legend_h = 26 * (long long)(partition.mars.size() + 1) + 20;
    const long long height = kMargin * 2 + grid_h + legend_h;

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // footprint points, one fill class per MARS signature
    std::vector<iset::Point> pts = iset::enumerate(partition.footprint, box);
    for (const auto& p : pts) {
        std::size_t cls = partition.mars.size();
        for (std::size_t i = 0; i < partition.mars.size(); ++i) {
            if (iset::contains(partition.mars[i].set, p)) {
                cls = i;
                break;
            }
        }
        const char* fill = cls < partition.mars.size() ? kPalette[cls % kPaletteSize] : "#dddddd";
        Rational x0 = X(Rational(p[0]));
        Rational y0 = Y(Rational(two_d ? p[1] : Int(0)) + 1);
        out << "<rect x=\"" << px(x0) << "\" y=\"" << px(y0) << "\" width=\"" << kScale
            << "\" height=\"" << kScale << "\" fill=\"" << fill
            << "\" stroke=\"#666\" stroke-width=\"0.5\"/>\n";
    }

    // unit grid over the drawn box
    out << "<g stroke=\"#cccccc\" stroke-width=\"0.5\">\n";
    for (Int gx = xlo; gx <= xhi + 1; ++gx)
        out << "<line x1=\"" << px(X(Rational(gx))) << "\" y1=\"" << px(Y(Rational(ylo)))
            << "\" x2=\"" << px(X(Rational(gx))) << "\" y2=\"" << px(Y(Rational(yhi) + 1))
            << "\"/>\n";
    for (Int gy = ylo; gy <= yhi + 1; ++gy)
        out << "<line x1=\"" << px(X(Rational(xlo))) << "\" y1=\"" << px(Y(Rational(gy)))
            << "\" x2=\"" << px(X(Rational(xhi) + 1)) << "\" y2=\"" << px(Y(Rational(gy)))
            << "\"/>\n";
    out << "</g>\n";

    // destination tiling boundaries, when the destination is tiled
    if (const model::TilingSpec* dt = program.tiling_of(dest)) {
        out << "<g stroke=\"#444444\" stroke-width=\"1\" stroke-dasharray=\"4 2\">\n";
        for (std::size_t k = 0; k < dt->hyperplanes(); ++k) {
            const auto& n = dt->normals[k];
            const Int z = dt->sizes[k];
            // phase range of n.x over the drawn box corners
            Int lo = n[0] * xlo + (two_d ? n[1] * ylo : Int(0)), hi = lo;
            std::vector<std::pair<Int, Int>> corners = {{xlo, ylo}, {xlo, yhi + 1}, {xhi + 1, ylo}, {xhi + 1, yhi + 1}};
            for (const auto& [cx, cy] : corners) {
                Int v = n[0] * cx + (two_d ? n[1] * cy : Int(0));
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            for (Int c = ceil_div(lo, z); c * z <= hi; ++c) {
                const Rational v(c * z);
                if (!two_d || n[1] == 0) {
                    if (n[0] == 0)
                        continue;
                    Rational x = v / Rational(n[0]);
                    out << "<line x1=\"" << px(X(x)) << "\" y1=\"" << px(Y(Rational(ylo)))
                        << "\" x2=\"" << px(X(x)) << "\" y2=\"" << px(Y(Rational(yhi) + 1))
                        << "\"/>\n";
                } else {
                    // endpoints at the left/right box edges
                    Rational yl = (v - Rational(n[0] * xlo)) / Rational(n[1]);
                    Rational yr = (v - Rational(n[0] * (xhi + 1))) / Rational(n[1]);
                    out << "<line x1=\"" << px(X(Rational(xlo))) << "\" y1=\"" << px(Y(yl))
                        << "\" x2=\"" << px(X(Rational(xhi) + 1)) << "\" y2=\"" << px(Y(yr))
                        << "\"/>\n";
                }
            }
        }
        out << "</g>\n";
    }

    // reference tile outline when the spaces share the 2-D shape
    const model::TilingSpec* st = program.tiling_of(src.name);
    if (two_d && st && st->hyperplanes() == 2) {
        linalg::RatMatrix N(2, 2);
        for (std::size_t r = 0; r < 2; ++r)
            for (std::size_t c = 0; c < 2; ++c)
                N.at(r, c) = Rational(st->normals[r][c]);
        auto corner = [&](const Rational& w0, const Rational& w1) {
            linalg::RatVector w(2);
            w[0] = w0;
            w[1] = w1;
            return linalg::solve(N, w);
        };
        std::vector<Rational> lo(2), hi(2);
        for (std::size_t j = 0; j < 2; ++j) {
            lo[j] = Rational(st->sizes[j] * partition.tile[j]);
            hi[j] = Rational(st->sizes[j] * (partition.tile[j] + 1));
        }
        linalg::RatVector c1 = corner(lo[0], lo[1]), c2 = corner(hi[0], lo[1]),
                          c3 = corner(hi[0], hi[1]), c4 = corner(lo[0], hi[1]);
        out << "<polygon points=\"";
        for (const auto& c : {c1, c2, c3, c4})
            out << px(X(c[0])) << "," << px(Y(c[1])) << " ";
        out << "\" fill=\"none\" stroke=\"#000\" stroke-width=\"1.5\"/>\n";
    }

    // legend of signatures
    long long ly = kMargin + grid_h + 30;
    out << "<text x=\"" << kMargin << "\" y=\"" << ly
        << "\" font-family=\"monospace\" font-size=\"14\">MARS signatures (consumer tile offsets)"
        << "</text>\n";
    ly += 10;
    for (std::size_t i = 0; i < partition.mars.size(); ++i) {
        ly += 26;
        out << "<rect x=\"" << kMargin << "\" y=\"" << (ly - 14) << "\" width=\"18\" height=\"18\" fill=\""
            << kPalette[i % kPaletteSize] << "\" stroke=\"#666\"/>\n";
        out << "<text x=\"" << (kMargin + 26) << "\" y=\"" << ly
            << "\" font-family=\"monospace\" font-size=\"13\">" << signature_label(partition, partition.mars[i].signature)
            << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

} // namespace mars::svg
