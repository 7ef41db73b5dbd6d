#include "lfdf/figures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "lfdf/lf_io.hpp"

namespace lfdf::fig {

namespace {

// five-stop approximation of a perceptually ordered ramp
const double kStops[5][3] = {{0.267, 0.005, 0.329},
                             {0.229, 0.322, 0.545},
                             {0.128, 0.567, 0.551},
                             {0.369, 0.789, 0.383},
                             {0.993, 0.906, 0.144}};

void colormap(double t, double* rgb) {
    t = std::clamp(t, 0.0, 1.0) * 4.0;
    const int i = std::min(3, static_cast<int>(t));
    const double f = t - i;
    for (int c = 0; c < 3; ++c) rgb[c] = (1.0 - f) * kStops[i][c] + f * kStops[i + 1][c];
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&')
            out += "&amp;";
        else if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else
            out += c;
    }
    return out;
}

const char* kPalette[6] = {"#d62728", "#1f77b4", "#2ca02c",
                           "#9467bd", "#ff7f0e", "#17becf"};

}  // namespace

void save_heatmap_png(const std::string& path, const Tensor& grid, int cell) {
    if (grid.rank() != 2 || grid.numel() == 0)
        throw std::invalid_argument("save_heatmap_png: expected a non-empty [R,C] grid");
    if (cell < 1) throw std::invalid_argument("save_heatmap_png: cell size must be positive");

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < grid.numel(); ++i)
        if (std::isfinite(grid[i])) {
            lo = std::min(lo, grid[i]);
            hi = std::max(hi, grid[i]);
        }
    if (!std::isfinite(lo)) {  // every entry infinite
        lo = 0.0;
        hi = 1.0;
    }
    const double span = hi > lo ? hi - lo : 1.0;

    const int R = grid.dim(0), C = grid.dim(1);
    Tensor img({R * cell, C * cell, 3});
    double rgb[3];
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) {
            const double v = grid.at(r, c);
            const double t = std::isfinite(v) ? (v - lo) / span : (v > 0 ? 1.0 : 0.0);
            colormap(t, rgb);
            for (int y = 0; y < cell; ++y)
                for (int x = 0; x < cell; ++x)
                    for (int ch = 0; ch < 3; ++ch)
                        img.at(r * cell + y, c * cell + x, ch) = rgb[ch];
        }
    io::write_png(path, img);
}

void save_polyline_svg(const std::string& path, const std::vector<double>& xs,
                       const std::vector<std::vector<double>>& ys,
                       const std::vector<std::string>& labels,
                       const std::string& x_label, const std::string& y_label) {
    if (xs.empty() || ys.empty() || ys.size() != labels.size())
        throw std::invalid_argument("save_polyline_svg: series/label mismatch");
    for (const auto& s : ys)
        if (s.size() != xs.size())
            throw std::invalid_argument("save_polyline_svg: series length mismatch");

    const double W = 640, H = 400, ml = 64, mr = 24, mt = 24, mb = 48;
    double xlo = xs.front(), xhi = xs.front();
    for (double x : xs) {
        xlo = std::min(xlo, x);
        xhi = std::max(xhi, x);
    }
    double ylo = std::numeric_limits<double>::infinity(), yhi = -ylo;
    for (const auto& s : ys)
        for (double y : s)
            if (std::isfinite(y)) {
                ylo = std::min(ylo, y);
                yhi = std::max(yhi, y);
            }
    if (!std::isfinite(ylo)) {
        ylo = 0.0;
        yhi = 1.0;
    }
    if (xhi == xlo) xhi = xlo + 1.0;
    if (yhi == ylo) yhi = ylo + 1.0;

    auto sx = [&](double x) { return ml + (x - xlo) / (xhi - xlo) * (W - ml - mr); };
    auto sy = [&](double y) { return H - mb - (y - ylo) / (yhi - ylo) * (H - mt - mb); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
        << H - mb << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
        << H - mb << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
        << xml_escape(x_label) << "</text>\n";
    svg << "<text x=\"16\" y=\"" << (mt + H - mb) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
           "transform=\"rotate(-90 16 "
        << (mt + H - mb) / 2 << ")\">" << xml_escape(y_label) << "</text>\n";
    svg << "<text x=\"" << ml - 6 << "\" y=\"" << sy(ylo) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << ylo
        << "</text>\n"
        << "<text x=\"" << ml - 6 << "\" y=\"" << sy(yhi) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << yhi
        << "</text>\n"
        << "<text x=\"" << sx(xlo) << "\" y=\"" << H - mb + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xlo
        << "</text>\n"
        << "<text x=\"" << sx(xhi) << "\" y=\"" << H - mb + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xhi
        << "</text>\n";

    for (std::size_t s = 0; s < ys.size(); ++s) {
        const char* color = kPalette[s % 6];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double y = std::isfinite(ys[s][i]) ? ys[s][i] : yhi;
            svg << sx(xs[i]) << "," << sy(y) << " ";
        }
        svg << "\"/>\n";
        svg << "<text x=\"" << W - mr - 4 << "\" y=\"" << mt + 16 + 16 * s
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
            << color << "\">" << xml_escape(labels[s]) << "</text>\n";
    }
    svg << "</svg>\n";
    io::write_text(path, svg.str());
}

void save_epi_strip_png(const std::string& path, const Tensor& epi, int scale) {
    if (epi.rank() != 3 || (epi.dim(2) != 1 && epi.dim(2) != 3))
        throw std::invalid_argument("save_epi_strip_png: expected [A,len,C] with C in {1,3}");
    if (scale < 1) throw std::invalid_argument("save_epi_strip_png: scale must be positive");
    const int A = epi.dim(0), L = epi.dim(1), C = epi.dim(2);
    Tensor img({A * scale, L, C});
    for (int a = 0; a < A; ++a)
        for (int y = 0; y < scale; ++y)
            for (int x = 0; x < L; ++x)
                for (int c = 0; c < C; ++c) img.at(a * scale + y, x, c) = epi.at(a, x, c);
    io::write_png(path, img);
}

}  // namespace lfdf::fig
